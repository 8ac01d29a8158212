//! Add-one-cost derivatives `𝔻_{(t,z)}G(ω) = G(ω + δ_{(t,z)}) − G(ω)` of the
//! driven process, computed by replaying the sweep on the augmented
//! configuration.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::montecarlo::sample_configuration;
use super::{Atom, PointConfiguration, TransportMap, TransportPath};
use crate::error::Result;
use crate::rng;

/// Tolerance on `𝔻λ_s ≤ 0`.
pub const LAMBDA_DERIVATIVE_TOL: f64 = 1e-12;
const MAX_RECORDED_VIOLATIONS: usize = 32;

/// Which branch of the contraction argument a probe exercises.
///
/// `Case3Direct` is case 3 with no atom of `ω` strictly between `t` and `s`.
/// Sub-cases 3.1–3.3 are read off the first such atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProofCase {
    Case1,
    Case2,
    Case3Direct,
    Case31,
    Case32,
    Case33,
    /// Augmented path counts the next atom but the base path does not.
    Unexpected,
}

impl ProofCase {
    pub const REQUIRED: [ProofCase; 5] =
        [ProofCase::Case1, ProofCase::Case2, ProofCase::Case31, ProofCase::Case32, ProofCase::Case33];

    pub fn label(&self) -> &'static str {
        match self {
            ProofCase::Case1 => "1",
            ProofCase::Case2 => "2",
            ProofCase::Case3Direct => "3",
            ProofCase::Case31 => "3.1",
            ProofCase::Case32 => "3.2",
            ProofCase::Case33 => "3.3",
            ProofCase::Unexpected => "unexpected",
        }
    }
}

/// One evaluated `(ω, (t,z), s)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalliavinProbe {
    /// The extra atom as inserted (after any tie-breaking nudge).
    pub extra: Atom,
    pub s: f64,
    pub derivative: i64,
    pub lambda_derivative: f64,
    pub case: ProofCase,
    pub tie_flagged: bool,
    /// `z ≤ λ_t(ω)` and `λ_t(ω+δ) = λ_t(ω)`.
    pub below_curve: bool,
}

struct Replay<'a> {
    base: &'a TransportPath,
    augmented: TransportPath,
    extra: Atom,
    extra_index: usize,
    tied: bool,
}

fn replay<'a>(
    map: &TransportMap,
    config: &PointConfiguration,
    base: &'a TransportPath,
    extra: Atom,
) -> Result<Replay<'a>> {
    let (augmented_config, extra_index, tied) = config.with_extra(extra);
    let augmented = map.drive(&augmented_config)?;
    let extra = augmented_config.atoms()[extra_index];
    Ok(Replay { base, augmented, extra, extra_index, tied })
}

impl Replay<'_> {
    fn case(&self, s: f64) -> ProofCase {
        let t = self.extra.t;
        if s <= t {
            return ProofCase::Case1;
        }
        if !self.augmented.accepted()[self.extra_index] {
            return ProofCase::Case2;
        }
        let atoms = self.base.atoms();
        let next = self.extra_index;
        if next >= atoms.len() || atoms[next].t >= s {
            return ProofCase::Case3Direct;
        }
        match (self.augmented.accepted()[next + 1], self.base.accepted()[next]) {
            (true, true) => ProofCase::Case31,
            (false, false) => ProofCase::Case32,
            (false, true) => ProofCase::Case33,
            (true, false) => ProofCase::Unexpected,
        }
    }

    fn evaluate(&self, map: &TransportMap, s: f64) -> MalliavinProbe {
        let derivative = self.augmented.x_at(s) as i64 - self.base.x_at(s) as i64;
        let lambda_derivative = self.augmented.lambda_at(map, s) - self.base.lambda_at(map, s);
        let t = self.extra.t;
        let lambda_base = self.base.lambda_at(map, t);
        let lambda_aug = self.augmented.lambda_at_atoms()[self.extra_index];
        MalliavinProbe {
            extra: self.extra,
            s,
            derivative,
            lambda_derivative,
            case: self.case(s),
            tie_flagged: self.tied,
            below_curve: lambda_base > 0.0 && self.extra.z <= lambda_base && lambda_aug == lambda_base,
        }
    }
}

/// `X_s(ω + δ_extra) − X_s(ω)` with its proof-case classification.
pub fn malliavin_derivative(
    map: &TransportMap,
    config: &PointConfiguration,
    extra: Atom,
    s: f64,
) -> Result<MalliavinProbe> {
    let base = map.drive(config)?;
    Ok(replay(map, config, &base, extra)?.evaluate(map, s))
}

/// Uniform `n×n` cell-centre grid plus probes straddling the base path's
/// intensity curve around every atom time.
pub fn probe_set(map: &TransportMap, base: &TransportPath, grid_n: usize) -> Vec<Atom> {
    let (horizon, height) = (map.horizon(), map.height());
    let mut probes = Vec::with_capacity(grid_n * grid_n + 4 * base.atoms().len());
    for i in 0..grid_n {
        let t = horizon * (i as f64 + 0.5) / grid_n as f64;
        for j in 0..grid_n {
            probes.push(Atom::new(t, height * (j as f64 + 0.5) / grid_n as f64));
        }
    }
    let eps = 1e-6 * horizon.min(height);
    for atom in base.atoms() {
        for t in [atom.t - eps, atom.t + eps] {
            let t = t.clamp(0.0, horizon);
            let lambda = base.lambda_at(map, t);
            for z in [lambda - eps, lambda + eps] {
                probes.push(Atom::new(t, z.clamp(0.0, height)));
            }
        }
    }
    probes
}

/// Reproduction recipe for a failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionViolation {
    pub kind: String,
    pub seed: u64,
    pub replication: u64,
    pub atoms: Vec<Atom>,
    pub probe: MalliavinProbe,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContractionReport {
    pub seed: u64,
    pub configurations: usize,
    pub probes: usize,
    pub triples: usize,
    /// `𝔻X_s ∉ {0, 1}`.
    pub binary_violations: usize,
    /// `𝔻X_s = 1` without `t < s`, `z ≤ λ_t(ω)` and `λ_t(ω+δ) = λ_t(ω)`.
    pub necessary_violations: usize,
    /// `𝔻λ_s > 1e−12`.
    pub lambda_violations: usize,
    /// Case 1/2 with nonzero derivative, direct case 3 without a unit one,
    /// or an `Unexpected` classification.
    pub case_violations: usize,
    pub max_lambda_derivative: f64,
    pub ties: usize,
    pub census: BTreeMap<String, usize>,
    pub examples: Vec<ContractionViolation>,
}

impl ContractionReport {
    pub fn violations(&self) -> usize {
        self.binary_violations + self.necessary_violations + self.lambda_violations + self.case_violations
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn case_count(&self, case: ProofCase) -> usize {
        self.census.get(case.label()).copied().unwrap_or(0)
    }

    /// Required proof cases never exercised.
    pub fn missing_cases(&self) -> Vec<&'static str> {
        ProofCase::REQUIRED.iter().filter(|c| self.case_count(**c) == 0).map(|c| c.label()).collect()
    }

    pub fn merge(&mut self, other: &ContractionReport) {
        self.configurations += other.configurations;
        self.probes += other.probes;
        self.triples += other.triples;
        self.binary_violations += other.binary_violations;
        self.necessary_violations += other.necessary_violations;
        self.lambda_violations += other.lambda_violations;
        self.case_violations += other.case_violations;
        self.max_lambda_derivative = self.max_lambda_derivative.max(other.max_lambda_derivative);
        self.ties += other.ties;
        for (k, v) in &other.census {
            *self.census.entry(k.clone()).or_default() += v;
        }
        let room = MAX_RECORDED_VIOLATIONS.saturating_sub(self.examples.len());
        self.examples.extend(other.examples.iter().take(room).cloned());
    }

    fn record(&mut self, probe: MalliavinProbe, seed: u64, replication: u64, config: &PointConfiguration) {
        self.triples += 1;
        *self.census.entry(probe.case.label().to_string()).or_default() += 1;
        self.max_lambda_derivative = self.max_lambda_derivative.max(probe.lambda_derivative);
        let mut failures = Vec::new();
        if !(0..=1).contains(&probe.derivative) {
            self.binary_violations += 1;
            failures.push("derivative not binary");
        }
        if probe.derivative == 1 && !(probe.extra.t < probe.s && probe.below_curve) {
            self.necessary_violations += 1;
            failures.push("necessary condition");
        }
        if probe.lambda_derivative > LAMBDA_DERIVATIVE_TOL {
            self.lambda_violations += 1;
            failures.push("lambda derivative positive");
        }
        let case_ok = match probe.case {
            ProofCase::Case1 | ProofCase::Case2 => probe.derivative == 0,
            ProofCase::Case3Direct => probe.derivative == 1,
            ProofCase::Unexpected => false,
            _ => true,
        };
        if !case_ok {
            self.case_violations += 1;
            failures.push("case outcome");
        }
        for kind in failures {
            if self.examples.len() < MAX_RECORDED_VIOLATIONS {
                self.examples.push(ContractionViolation {
                    kind: kind.to_string(),
                    seed,
                    replication,
                    atoms: config.atoms().to_vec(),
                    probe,
                });
            }
        }
    }
}

/// Replays every probe against one configuration, over `s` ranging through
/// the configuration's atom times and `T`.
pub fn check_configuration(
    map: &TransportMap,
    config: &PointConfiguration,
    probes: Option<&[Atom]>,
    grid_n: usize,
    seed: u64,
    replication: u64,
) -> Result<ContractionReport> {
    let base = map.drive(config)?;
    let generated;
    let probes = match probes {
        Some(p) => p,
        None => {
            generated = probe_set(map, &base, grid_n);
            &generated
        }
    };
    let mut s_values: Vec<f64> = config.atoms().iter().map(|a| a.t).collect();
    s_values.push(map.horizon());
    s_values.dedup();

    let mut report = ContractionReport { seed, configurations: 1, ..Default::default() };
    for &extra in probes {
        let rep = replay(map, config, &base, extra)?;
        report.probes += 1;
        if rep.tied {
            report.ties += 1;
        }
        for &s in &s_values {
            report.record(rep.evaluate(map, s), seed, replication, config);
        }
    }
    Ok(report)
}

/// Samples `n_configs` configurations and replays the probe set of each.
pub fn check_contraction(map: &TransportMap, n_configs: usize, grid_n: usize, seed: u64) -> Result<ContractionReport> {
    let parts: Vec<Result<ContractionReport>> = (0..n_configs as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::substream(seed, rep);
            let config = sample_configuration(map.horizon(), map.height(), &mut rng);
            check_configuration(map, &config, None, grid_n, seed, rep)
        })
        .collect();
    let mut total = ContractionReport { seed, ..Default::default() };
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{LogConcaveFn, UlcMeasure};

    #[test]
    fn extra_after_s_has_no_effect() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let config = PointConfiguration::from_sorted(vec![Atom::new(0.3, 0.5)]).unwrap();
        let p = malliavin_derivative(&map, &config, Atom::new(0.6, 0.1), 0.5).unwrap();
        assert_eq!(p.derivative, 0);
        assert_eq!(p.case, ProofCase::Case1);
    }

    #[test]
    fn extra_above_curve_has_no_effect() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let config = PointConfiguration::from_sorted(vec![Atom::new(0.7, 0.5)]).unwrap();
        let p = malliavin_derivative(&map, &config, Atom::new(0.2, 2.99), 1.0).unwrap();
        assert_eq!(p.case, ProofCase::Case2);
        assert_eq!(p.derivative, 0);
    }

    #[test]
    fn extra_below_curve_on_empty_config_counts() {
        let map = TransportMap::new(UlcMeasure::bernoulli(0.5, 1.0).unwrap());
        let p = malliavin_derivative(&map, &PointConfiguration::empty(), Atom::new(0.2, 0.3), 1.0).unwrap();
        assert_eq!(p.case, ProofCase::Case3Direct);
        assert_eq!(p.derivative, 1);
        assert!(p.below_curve);
        assert!(p.lambda_derivative <= 0.0);
    }

    #[test]
    fn constant_intensity_counts_exactly_below_one() {
        let map = TransportMap::new(UlcMeasure::from_density(&LogConcaveFn::constant(60), 1.0).unwrap());
        let config = PointConfiguration::from_sorted(vec![Atom::new(0.25, 0.4), Atom::new(0.75, 0.9)]).unwrap();
        for &(t, z) in &[(0.1, 0.5), (0.5, 0.999), (0.9, 0.01), (0.3, 0.7)] {
            let p = malliavin_derivative(&map, &config, Atom::new(t, z), 1.0).unwrap();
            assert_eq!(p.derivative, 1, "({t},{z})");
        }
        let report = check_configuration(&map, &config, None, 20, 0, 0).unwrap();
        assert!(report.passed());
        assert_eq!(report.case_count(ProofCase::Case2), 0);
    }

    #[test]
    fn absorbed_case_instance_exists() {
        // Search for ω and (t,z) where the extra atom pushes the next atom above
        // the curve that the base path accepts: derivative drops back to 0.
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let mut found = None;
        'search: for rep in 0..200u64 {
            let mut rng = rng::substream(11, rep);
            let config = sample_configuration(map.horizon(), map.height(), &mut rng);
            let base = map.drive(&config).unwrap();
            for extra in probe_set(&map, &base, 20) {
                let p = malliavin_derivative(&map, &config, extra, 1.0).unwrap();
                if p.case == ProofCase::Case33 {
                    found = Some((config.clone(), p));
                    break 'search;
                }
            }
        }
        let (config, p) = found.expect("case 3.3 instance");
        let (aug, idx, _) = config.with_extra(p.extra);
        let next = &aug.atoms()[idx + 1];
        let base = map.drive(&config).unwrap();
        let augmented = map.drive(&aug).unwrap();
        assert!(next.z > augmented.lambda_at_atoms()[idx + 1]);
        assert!(next.z <= base.lambda_at_atoms()[idx]);
        assert!((0..=1).contains(&p.derivative));
    }

    #[test]
    fn binomial_sweep_has_no_violations() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let report = check_contraction(&map, 8, 30, 5).unwrap();
        assert!(report.triples >= 10_000, "{}", report.triples);
        assert!(report.passed(), "{:?}", report.examples);
    }
}
