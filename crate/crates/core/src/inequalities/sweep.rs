//! Randomized sweeps over instance families.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random::{random_g, random_nu, random_ulc};
use super::{constant_chain, mlsi_check, phi_sobolev_check, poincare_fj_check, transport_entropy_check, PhiSpec};
use crate::error::{Error, Result};
use crate::measures::UlcMeasure;
use crate::report::InequalityReport;
use crate::rng;

/// Largest support used by the sweep generators.
pub const SWEEP_MAX_SUPPORT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mlsi,
    Phi,
    Transport,
    Chain,
    Poincare,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Mlsi, Family::Phi, Family::Transport, Family::Chain, Family::Poincare];

    pub fn label(self) -> &'static str {
        match self {
            Family::Mlsi => "mlsi",
            Family::Phi => "phi",
            Family::Transport => "transport",
            Family::Chain => "chain",
            Family::Poincare => "poincare",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("unknown family `{s}`") })
    }
}

/// One verified inequality of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub instance: usize,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub asserted: bool,
    pub passed: bool,
    /// Equality checks carry `lhs = |a − b|`, `rhs = 0` and are judged by their
    /// own tolerance rather than by relative slack.
    pub identity: bool,
}

/// A report-only inequality that failed (conjectural constants, diagnostics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub instance: usize,
    pub name: String,
    pub slack: f64,
    /// Text serialization of the target.
    pub target: String,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub family: Family,
    pub seed: u64,
    pub instances: usize,
    pub violations: usize,
    /// Smallest asserted inequality slack, `rhs − lhs`.
    pub worst_slack: f64,
    /// Smallest asserted slack divided by `max(|lhs|, |rhs|, 1)`.
    pub worst_relative_slack: f64,
    pub findings: Vec<Finding>,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn violating_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.asserted && !r.passed)
    }
}

struct Instance {
    reports: Vec<InequalityReport>,
    identities: usize,
    findings: Vec<Finding>,
}

fn finding(instance: usize, name: &str, slack: f64, target: &UlcMeasure, witness: Vec<f64>) -> Finding {
    Finding { instance, name: name.to_string(), slack, target: target.to_text(), witness }
}

fn run_instance(family: Family, seed: u64, i: usize, phis: &[PhiSpec; 2]) -> Result<Instance> {
    let mut rng = rng::substream(seed, i as u64);
    let target = random_ulc(&mut rng, SWEEP_MAX_SUPPORT);
    let mut findings = Vec::new();
    let mut identities = 0;
    let reports = match family {
        Family::Mlsi => {
            let g = random_g(&mut rng, &target, true);
            let reports = mlsi_check(&target, &g)?.to_vec();
            for r in reports.iter().filter(|r| !r.asserted && !r.passed) {
                findings.push(finding(i, &r.name, r.slack, &target, g.clone()));
            }
            reports
        }
        Family::Phi => {
            let g_pos = random_g(&mut rng, &target, true);
            let g_real = random_g(&mut rng, &target, false);
            vec![phi_sobolev_check(&target, &g_pos, &phis[0])?, phi_sobolev_check(&target, &g_real, &phis[1])?]
        }
        Family::Poincare => {
            let g = random_g(&mut rng, &target, false);
            vec![poincare_fj_check(&target, &g)?]
        }
        Family::Transport => {
            let nu = random_nu(&mut rng, &target);
            let r = transport_entropy_check(&target, &nu)?;
            let improved = r.diagnostics.iter().find(|(k, _)| k == "log_const_slack").map(|d| d.1).unwrap_or(0.0);
            if improved < -r.tolerance {
                findings.push(finding(i, "transport-entropy |log mu(0)|", improved, &target, nu.weights().to_vec()));
            }
            vec![r]
        }
        Family::Chain => {
            let c = constant_chain(&target)?;
            let mut reports = c.reports().to_vec();
            let identity = |name: &str, a: f64, b: f64, ok: bool| {
                let mut r = InequalityReport::new(name, (a - b).abs(), 0.0, 1.0, 0.0);
                r.passed = ok;
                r
            };
            reports.push(identity("mean = T P_T f(1)", c.mean, c.mean_identity, c.mean_identity_ok));
            reports.push(identity("|log mu(0)| = T - ln f(0)", c.log_const, c.log_identity, c.log_identity_ok));
            reports.push(identity("|log mu(0)| = int ratio", c.log_const, c.integrated_ratio, c.quadrature_ok));
            identities = 3;
            reports
        }
    };
    Ok(Instance { reports, identities, findings })
}

/// Runs `n` random instances of `family`, instance `i` on substream `(seed, i)`.
pub fn sweep(family: Family, n: usize, seed: u64) -> Result<SweepSummary> {
    let phis = [PhiSpec::entropy(), PhiSpec::square()];
    let instances: Vec<Instance> =
        (0..n).into_par_iter().map(|i| run_instance(family, seed, i, &phis)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut findings = Vec::new();
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_relative_slack = f64::INFINITY;
    for (i, inst) in instances.into_iter().enumerate() {
        let first_identity = inst.reports.len() - inst.identities;
        for (j, r) in inst.reports.into_iter().enumerate() {
            let identity = j >= first_identity;
            if r.asserted && !identity {
                violations += usize::from(!r.passed);
                worst_slack = worst_slack.min(r.slack);
                worst_relative_slack = worst_relative_slack.min(r.slack / r.lhs.abs().max(r.rhs.abs()).max(1.0));
            }
            if identity {
                violations += usize::from(!r.passed);
            }
            rows.push(SweepRow {
                instance: i,
                name: r.name,
                lhs: r.lhs,
                rhs: r.rhs,
                slack: r.slack,
                asserted: r.asserted,
                passed: r.passed,
                identity,
            });
        }
        findings.extend(inst.findings);
    }
    Ok(SweepSummary { family, seed, instances: n, violations, worst_slack, worst_relative_slack, findings, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_runs_clean() {
        for family in Family::ALL {
            let s = sweep(family, 200, 11).unwrap();
            assert_eq!(s.instances, 200);
            assert_eq!(s.violations, 0, "{family}: {:?}", s.violating_rows().next());
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        assert_eq!(sweep(Family::Mlsi, 50, 3).unwrap(), sweep(Family::Mlsi, 50, 3).unwrap());
    }

    #[test]
    fn family_parses() {
        assert_eq!("phi".parse::<Family>().unwrap(), Family::Phi);
        assert!("nope".parse::<Family>().is_err());
    }
}
