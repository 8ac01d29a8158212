use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ptm_core::inequalities::{constant_chain, sweep, Family, IDENTITY_TOL, QUADRATURE_TOL};
use ptm_core::measures::{check_log_concave_logs, check_ulc, ln_poisson_pmf, STRUCTURE_TOL};
use ptm_core::semigroup::{fokker_planck_evolve, uniform_grid, verify_lc_preserved, verify_semigroup_pde};
use ptm_core::transport::{
    check_contraction, marginal_tests, martingale_stats, sample_configuration, transport_sample, LAMBDA_DERIVATIVE_TOL,
};
use ptm_core::{rng, CheckReport, InequalityReport, SemigroupEvaluator, TransportMap, VERSION};
use serde_json::{json, Value};

use crate::args::{Command, IneqAction, SemigroupAction};
use crate::output::{self, emit, file_stem, fmt, parse_timestamp, table, Outcome, RunReport};
use crate::target::{self, RawTarget};
use crate::{RunConfig, UsageError, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

const DEFAULT_TIME_INTERVALS: usize = 20;
const DEFAULT_MARTINGALE_INTERVALS: usize = 4;
const DEFAULT_PROBE_GRID: usize = 50;
const DEFAULT_DRIVES: usize = 10_000;
const DEFAULT_CONFIGS: usize = 20;
const DEFAULT_SWEEP: usize = 1_000;
const FK_TOL: f64 = 1e-6;
const MERGED: &str = "merged.json";

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<i32, UsageError> {
    if let Command::Report { dir } = command {
        let dir =
            dir.clone().or_else(|| cfg.out.clone()).ok_or_else(|| UsageError("report needs a directory".into()))?;
        return Ok(merge_reports(&dir));
    }
    let mut tolerances = cfg.base_tolerances();
    let (name, raw, outcome) = match command {
        Command::CheckUlc => {
            let raw = need_target(cfg)?;
            tolerances.insert("structure_log", STRUCTURE_TOL);
            let o = check_ulc_cmd(&raw);
            ("check-ulc".to_string(), Some(raw), o)
        }
        Command::Semigroup { action: SemigroupAction::Dump } => {
            let raw = need_target(cfg)?;
            let o = semigroup_dump(cfg, &raw)?;
            ("semigroup dump".to_string(), Some(raw), o)
        }
        Command::Semigroup { action: SemigroupAction::Verify } => {
            let raw = need_target(cfg)?;
            tolerances.insert("structure_log", STRUCTURE_TOL);
            let o = semigroup_verify(cfg, &raw)?;
            ("semigroup verify".to_string(), Some(raw), o)
        }
        Command::FokkerPlanck => {
            let raw = need_target(cfg)?;
            tolerances.insert("sup_error", FK_TOL);
            let o = fokker_planck(cfg, &raw)?;
            ("fokker-planck".to_string(), Some(raw), o)
        }
        Command::Simulate => {
            let raw = need_target(cfg)?;
            let o = simulate(cfg, &raw)?;
            ("simulate".to_string(), Some(raw), o)
        }
        Command::Path { rep } => {
            let raw = need_target(cfg)?;
            let o = path(cfg, &raw, *rep)?;
            (format!("path rep{rep}"), Some(raw), o)
        }
        Command::Marginal { at, budget } => {
            let raw = need_target(cfg)?;
            if let Some(b) = budget {
                tolerances.insert("tv_budget", *b);
            }
            let o = marginal(cfg, &raw, at.as_deref(), *budget)?;
            ("marginal".to_string(), Some(raw), o)
        }
        Command::Martingale => {
            let raw = need_target(cfg)?;
            tolerances.insert("sigmas", 4.0);
            let o = martingale(cfg, &raw)?;
            ("martingale".to_string(), Some(raw), o)
        }
        Command::Contraction => {
            let raw = need_target(cfg)?;
            tolerances.insert("lambda_derivative", LAMBDA_DERIVATIVE_TOL);
            let o = contraction(cfg, &raw)?;
            ("contraction".to_string(), Some(raw), o)
        }
        Command::Ineq { action: IneqAction::Sweep { family } } => {
            let family: Family = family.parse().map_err(|e| UsageError(format!("--family: {e}")))?;
            tolerances.insert("identity", IDENTITY_TOL);
            tolerances.insert("quadrature", QUADRATURE_TOL);
            let name = format!("ineq sweep {family}");
            let o = ineq_sweep(cfg, family, &name)?;
            (name, None, o)
        }
        Command::Chain => {
            let raw = need_target(cfg)?;
            tolerances.insert("identity", IDENTITY_TOL);
            tolerances.insert("quadrature", QUADRATURE_TOL);
            let o = chain(cfg, &raw)?;
            ("chain".to_string(), Some(raw), o)
        }
        Command::Report { .. } => unreachable!(),
    };
    let empty = json!([]);
    let report = RunReport {
        timestamp: output::timestamp(),
        command: &name,
        seed: cfg.seed,
        target: raw.as_ref().map(RawTarget::info),
        tolerances,
        version: VERSION,
        results: &outcome.results,
        violations: outcome.violations,
        findings: if outcome.findings.is_null() { &empty } else { &outcome.findings },
    };
    emit(&report, &outcome, cfg.out.as_deref()).map_err(|e| UsageError(format!("writing output: {e}")))?;
    if outcome.violations > 0 {
        eprintln!("{name}: {} violation(s)", outcome.violations);
        Ok(EXIT_VIOLATION)
    } else {
        Ok(EXIT_OK)
    }
}

fn need_target(cfg: &RunConfig) -> Result<RawTarget, UsageError> {
    let words = cfg.target.as_ref().ok_or_else(|| UsageError("--target is required".into()))?;
    target::parse(words, cfg.seed)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn rejudge(mut r: InequalityReport, tol_rel: f64) -> InequalityReport {
    r.tolerance = tol_rel * r.lhs.abs().max(r.rhs.abs()).max(1.0);
    r.passed = r.slack >= -r.tolerance;
    r
}

fn check_rows(reports: &[CheckReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.checked.to_string(),
                r.violations.to_string(),
                if r.checked == 0 { "-".into() } else { fmt(r.worst_margin) },
                if r.passed { "pass" } else { "FAIL" }.into(),
            ]
        })
        .collect()
}

const CHECK_HEADER: [&str; 5] = ["check", "checked", "violations", "worst margin", "status"];

fn check_ulc_cmd(raw: &RawTarget) -> Outcome {
    let pv = &raw.pv;
    let ulc = check_ulc(pv);
    let gap = pv.support_gap();
    let mut reports = vec![ulc];
    if gap.is_none() {
        let top = pv.support_top();
        let logs: Vec<f64> = (0..=top).map(|k| pv.weight(k).ln() - ln_poisson_pmf(raw.horizon, k)).collect();
        let mut lc = check_log_concave_logs(&logs, STRUCTURE_TOL);
        lc.name = "f = mu/pi_T log-concave".into();
        reports.push(lc);
    }
    let violations = reports.iter().filter(|r| !r.passed).count() + usize::from(gap.is_some());
    let mut table = table(&CHECK_HEADER, &check_rows(&reports));
    if let Some(k) = gap {
        let _ = writeln!(table, "support has a gap at k={k}");
    }
    Outcome { results: json!({ "checks": reports, "support_gap": gap }), violations, table, ..Default::default() }
}

fn evaluator(raw: &RawTarget) -> Result<(ptm_core::UlcMeasure, SemigroupEvaluator), UsageError> {
    let mu = raw.ulc()?;
    let eval = SemigroupEvaluator::for_target(&mu);
    Ok((mu, eval))
}

fn semigroup_dump(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let (mu, eval) = evaluator(raw)?;
    let grid = uniform_grid(mu.horizon(), cfg.grid.unwrap_or(DEFAULT_TIME_INTERVALS));
    let mut csv = String::from("t,k,p,df\n");
    for &t in &grid {
        for k in 0..=eval.top() {
            let p = eval.potential(t, k).exp();
            let df = eval.potential_df(t, k).map_err(|e| UsageError(e.to_string()))?;
            let _ = writeln!(csv, "{t:?},{k},{p:?},{df:?}");
        }
    }
    Ok(Outcome {
        results: json!({ "times": grid.len(), "states": eval.top() + 1 }),
        csv: vec![(String::new(), csv)],
        csv_primary: true,
        ..Default::default()
    })
}

fn semigroup_verify(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let (mu, eval) = evaluator(raw)?;
    let horizon = mu.horizon();
    let grid = uniform_grid(horizon, cfg.grid.unwrap_or(DEFAULT_TIME_INTERVALS));
    let mut reports = Vec::new();
    let mut lc = CheckReport::new("P_s f log-concave on grid");
    for (i, &t) in grid.iter().enumerate() {
        let r = verify_lc_preserved(mu.density(), horizon - t).map_err(|e| UsageError(e.to_string()))?;
        lc.record(i, r.worst_margin, STRUCTURE_TOL);
    }
    reports.push(lc);
    for k in 0..eval.top() {
        reports.push(eval.verify_ratio_monotone(k, &grid));
    }
    reports.push(eval.verify_ratio_bound(&grid));
    let mut richardson = Value::Null;
    if eval.top() >= 1 {
        let f = mu.density().values();
        let (t, h) = (0.5 * horizon, 1e-2 * horizon.min(1.0));
        let coarse = verify_semigroup_pde(f, t, 0, h).map_err(|e| UsageError(e.to_string()))?;
        let fine = verify_semigroup_pde(f, t, 0, 0.5 * h).map_err(|e| UsageError(e.to_string()))?;
        richardson = json!({ "t": t, "h": h, "residual_h": coarse, "residual_h2": fine, "ratio": coarse / fine });
    }
    let violations = reports.iter().filter(|r| !r.passed).count();
    Ok(Outcome {
        results: json!({ "checks": reports, "pde_richardson": richardson }),
        violations,
        table: table(&CHECK_HEADER, &check_rows(&reports)),
        ..Default::default()
    })
}

fn fokker_planck(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let (mu, eval) = evaluator(raw)?;
    let grid = uniform_grid(mu.horizon(), cfg.grid.unwrap_or(DEFAULT_TIME_INTERVALS));
    let curve = match fokker_planck_evolve(&eval, &grid) {
        Ok(curve) => curve,
        Err(e) => {
            return Ok(Outcome {
                results: json!({ "error": e.to_string() }),
                violations: 1,
                findings: json!([e.to_string()]),
                ..Default::default()
            })
        }
    };
    let err = curve.sup_error(&eval);
    let mut csv = String::from("t,k,fokker_planck,closed_form\n");
    for (t, row) in curve.grid.iter().zip(&curve.rows) {
        let exact = eval.closed_form_marginal(*t, row.len() - 1);
        for (k, (a, b)) in row.iter().zip(&exact).enumerate() {
            let _ = writeln!(csv, "{t:?},{k},{a:?},{b:?}");
        }
    }
    Ok(Outcome {
        results: json!({ "times": grid.len(), "step": 1e-3 * mu.horizon(), "sup_error": err }),
        violations: usize::from(err.is_nan() || err > FK_TOL),
        csv: vec![(String::new(), csv)],
        table: table(
            &["quantity", "value"],
            &[vec!["sup error".into(), fmt(err)], vec!["tolerance".into(), fmt(FK_TOL)]],
        ),
        ..Default::default()
    })
}

fn simulate(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let mu = raw.ulc()?;
    let n = cfg.n.unwrap_or(DEFAULT_DRIVES);
    let map = TransportMap::new(mu.clone());
    let xs = transport_sample(&map, n, cfg.seed);
    let mut counts = vec![0usize; mu.support_top() + 1];
    let mut csv = String::from("rep,x_t\n");
    for (rep, &x) in xs.iter().enumerate() {
        counts[x] += 1;
        let _ = writeln!(csv, "{rep},{x}");
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let tv = 0.5 * empirical.iter().enumerate().map(|(k, p)| (p - mu.weight(k)).abs()).sum::<f64>();
    let mean = xs.iter().sum::<usize>() as f64 / n as f64;
    Ok(Outcome {
        results: json!({ "n": n, "mean": mean, "target_mean": mu.mean(), "empirical": empirical, "tv": tv }),
        csv: vec![(String::new(), csv)],
        csv_primary: true,
        table: table(
            &["quantity", "value"],
            &[
                vec!["n".into(), n.to_string()],
                vec!["mean".into(), fmt(mean)],
                vec!["target mean".into(), fmt(mu.mean())],
                vec!["tv".into(), fmt(tv)],
            ],
        ),
        ..Default::default()
    })
}

fn path(cfg: &RunConfig, raw: &RawTarget, rep: u64) -> Result<Outcome, UsageError> {
    let map = TransportMap::new(raw.ulc()?);
    let config = sample_configuration(map.horizon(), map.height(), &mut rng::substream(cfg.seed, rep));
    let p = map.drive(&config).map_err(|e| UsageError(e.to_string()))?;
    let mut csv = String::from("t,z,lambda,accepted,x_before\n");
    for (i, a) in p.atoms().iter().enumerate() {
        let _ = writeln!(csv, "{:?},{:?},{:?},{},{}", a.t, a.z, p.lambda_at_atoms()[i], p.accepted()[i], p.x_at(a.t));
    }
    Ok(Outcome {
        results: json!({
            "rep": rep,
            "atoms": p.atoms().len(),
            "height": map.height(),
            "jump_times": p.jump_times(),
            "final_value": p.final_value(),
        }),
        csv: vec![(String::new(), csv)],
        csv_primary: true,
        ..Default::default()
    })
}

fn marginal(cfg: &RunConfig, raw: &RawTarget, at: Option<&[f64]>, budget: Option<f64>) -> Result<Outcome, UsageError> {
    let mu = raw.ulc()?;
    let horizon = mu.horizon();
    let times = at.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.5 * horizon, horizon]);
    let map = TransportMap::new(mu);
    let n = cfg.n.unwrap_or(DEFAULT_DRIVES);
    let reports = marginal_tests(&map, &times, n, cfg.seed, budget).map_err(|e| UsageError(e.to_string()))?;
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                format!("{:.6}", r.t),
                fmt(r.tv),
                fmt(r.budget),
                format!("{:.3}", r.chi_square),
                r.dof.to_string(),
                if r.passed { "pass" } else { "FAIL" }.into(),
            ]
        })
        .collect::<Vec<_>>();
    Ok(Outcome {
        violations: reports.iter().filter(|r| !r.passed).count(),
        results: to_value(&reports),
        table: table(&["t", "tv", "budget", "chi2", "dof", "status"], &rows),
        ..Default::default()
    })
}

fn martingale(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let mu = raw.ulc()?;
    let grid = uniform_grid(mu.horizon(), cfg.grid.unwrap_or(DEFAULT_MARTINGALE_INTERVALS));
    let map = TransportMap::new(mu);
    let r = martingale_stats(&map, cfg.n.unwrap_or(DEFAULT_DRIVES), &grid, cfg.seed)
        .map_err(|e| UsageError(e.to_string()))?;
    let rows = (0..grid.len())
        .map(|i| {
            vec![
                format!("{:.6}", grid[i]),
                fmt(r.means[i]),
                fmt(r.std_errors[i]),
                fmt(r.expected),
                if r.within_band[i] { "pass" } else { "FAIL" }.into(),
            ]
        })
        .collect::<Vec<_>>();
    Ok(Outcome {
        violations: usize::from(!r.passed),
        table: table(&["t", "mean lambda", "std error", "P_T f(1)", "status"], &rows),
        results: to_value(&r),
        ..Default::default()
    })
}

fn contraction(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let map = TransportMap::new(raw.ulc()?);
    let r = check_contraction(&map, cfg.n.unwrap_or(DEFAULT_CONFIGS), cfg.grid.unwrap_or(DEFAULT_PROBE_GRID), cfg.seed)
        .map_err(|e| UsageError(e.to_string()))?;
    let missing = r.missing_cases();
    let findings: Vec<String> = missing.iter().map(|c| format!("proof case {c} not exercised")).collect();
    let mut rows: Vec<Vec<String>> = r.census.iter().map(|(k, v)| vec![format!("case {k}"), v.to_string()]).collect();
    rows.push(vec!["triples".into(), r.triples.to_string()]);
    rows.push(vec!["violations".into(), r.violations().to_string()]);
    rows.push(vec!["max D lambda".into(), fmt(r.max_lambda_derivative)]);
    Ok(Outcome {
        violations: r.violations(),
        findings: json!(findings),
        table: table(&["quantity", "count"], &rows),
        results: to_value(&r),
        ..Default::default()
    })
}

fn ineq_sweep(cfg: &RunConfig, family: Family, name: &str) -> Result<Outcome, UsageError> {
    let n = cfg.n.unwrap_or(DEFAULT_SWEEP);
    let mut s = sweep(family, n, cfg.seed).map_err(|e| UsageError(e.to_string()))?;
    let mut violations = 0;
    for row in &mut s.rows {
        if !row.identity {
            let tol = cfg.tol_rel * row.lhs.abs().max(row.rhs.abs()).max(1.0);
            row.passed = row.slack >= -tol;
        }
        violations += usize::from(row.asserted && !row.passed);
    }
    let mut csv = String::from("instance,name,lhs,rhs,slack,asserted,passed\n");
    for r in &s.rows {
        let _ = writeln!(
            csv,
            "{},{},{:?},{:?},{:?},{},{}",
            r.instance, r.name, r.lhs, r.rhs, r.slack, r.asserted, r.passed
        );
    }
    let stem = file_stem(name, cfg.seed);
    let findings_path = cfg.out.as_ref().map(|d| d.join(format!("{stem}-findings.json")).display().to_string());
    let findings = to_value(&s.findings);
    Ok(Outcome {
        results: json!({
            "family": family,
            "instances": s.instances,
            "rows": s.rows.len(),
            "violations": violations,
            "worst_slack": s.worst_slack,
            "worst_relative_slack": s.worst_relative_slack,
            "findings": s.findings.len(),
            "findings_path": findings_path,
        }),
        violations,
        table: table(
            &["quantity", "value"],
            &[
                vec!["family".into(), family.to_string()],
                vec!["instances".into(), s.instances.to_string()],
                vec!["violations".into(), violations.to_string()],
                vec!["worst slack".into(), fmt(s.worst_slack)],
                vec!["worst relative slack".into(), fmt(s.worst_relative_slack)],
                vec!["report-only findings".into(), s.findings.len().to_string()],
            ],
        ),
        extra: vec![("findings.json".into(), serde_json::to_string_pretty(&findings).expect("json") + "\n")],
        findings,
        csv: vec![(String::new(), csv)],
        ..Default::default()
    })
}

fn chain(cfg: &RunConfig, raw: &RawTarget) -> Result<Outcome, UsageError> {
    let mu = raw.ulc()?;
    let c = constant_chain(&mu).map_err(|e| UsageError(e.to_string()))?;
    let reports: Vec<InequalityReport> = c.reports().into_iter().map(|r| rejudge(r, cfg.tol_rel)).collect();
    let identities_ok = c.mean_identity_ok && c.log_identity_ok && c.quadrature_ok;
    let violations = reports.iter().filter(|r| !r.passed).count() + usize::from(!identities_ok);
    let rows = [
        ("E[mu]", c.mean),
        ("T P_T f(1)", c.mean_identity),
        ("|log mu(0)|", c.log_const),
        ("mu(1)/mu(0)", c.ratio_const),
        ("T - ln f(0)", c.log_identity),
        ("int_0^T ratio dt", c.integrated_ratio),
    ]
    .iter()
    .map(|(k, v)| vec![k.to_string(), format!("{v:.12}")])
    .collect::<Vec<_>>();
    Ok(Outcome {
        results: json!({ "chain": c, "inequalities": reports }),
        violations,
        table: table(&["quantity", "value"], &rows),
        ..Default::default()
    })
}

/// Merges every run report in `dir` into `dir/merged.json`, keyed by
/// `command/seed`; the later timestamp wins on collisions.
fn merge_reports(dir: &Path) -> i32 {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    };
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != MERGED))
        .collect();
    paths.sort();
    let mut merged: BTreeMap<String, ((u64, u32), Value)> = BTreeMap::new();
    for p in &paths {
        let parsed = fs::read_to_string(p).ok().and_then(|s| serde_json::from_str::<Value>(&s).ok());
        let Some(doc) = parsed else {
            eprintln!("warning: skipping unreadable artifact {}", p.display());
            continue;
        };
        let fields = (
            doc.get("command").and_then(Value::as_str),
            doc.get("seed").and_then(Value::as_u64),
            doc.get("timestamp").and_then(Value::as_str).and_then(parse_timestamp),
        );
        let (Some(command), Some(seed), Some(ts)) = fields else {
            // Findings files and foreign JSON are not run reports.
            if doc.get("command").is_some() {
                eprintln!("warning: skipping malformed report {}", p.display());
            }
            continue;
        };
        let key = format!("{command}/{seed}");
        match merged.get(&key) {
            Some((old, _)) => {
                eprintln!("warning: duplicate report for {key}; keeping the later timestamp");
                if ts > *old {
                    merged.insert(key, (ts, doc));
                }
            }
            None => {
                merged.insert(key, (ts, doc));
            }
        }
    }
    if merged.is_empty() {
        eprintln!("error: no run reports found in {}", dir.display());
        return EXIT_USAGE;
    }
    let runs: BTreeMap<&String, &Value> = merged.iter().map(|(k, (_, v))| (k, v)).collect();
    let doc = json!({ "timestamp": output::timestamp(), "command": "report", "version": VERSION, "runs": runs });
    if let Err(e) = fs::write(dir.join(MERGED), serde_json::to_string_pretty(&doc).expect("json") + "\n") {
        eprintln!("error: writing {MERGED}: {e}");
        return EXIT_USAGE;
    }
    let rows: Vec<Vec<String>> = merged
        .iter()
        .map(|(k, (_, v))| {
            vec![
                k.clone(),
                v.get("violations").map(Value::to_string).unwrap_or_default(),
                v.get("timestamp").and_then(Value::as_str).unwrap_or("").to_string(),
            ]
        })
        .collect();
    print!("{}", table(&["run", "violations", "timestamp"], &rows));
    EXIT_OK
}
