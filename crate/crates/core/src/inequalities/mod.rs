//! Constant comparisons and functional inequalities for ULC targets.

mod random;
mod sweep;

pub use random::{random_g, random_log_concave, random_nu, random_ulc};
pub use sweep::{sweep, Family, Finding, SweepRow, SweepSummary};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    alpha_c, phi_entropy, psi_mlsi, relative_entropy, wasserstein1, ConvexFunction, Interval, ProbabilityVector,
    Square, UlcMeasure, XLogX,
};
use crate::numeric::compensated_sum;
use crate::report::{InequalityReport, DEFAULT_REL_TOL};
use crate::semigroup::SemigroupEvaluator;

/// Tolerance for the identities `E[μ] = T·P_T f(1)` and `|log μ(0)| = T − ln f(0)`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for the quadrature cross-check `∫₀ᵀ e^{DF(t,0)} dt = |log μ(0)|`.
pub const QUADRATURE_TOL: f64 = 1e-8;
const QUADRATURE_HALF_INTERVALS: usize = 2000;

/// The four mean/constant quantities attached to a ULC target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantChain {
    /// `E[μ]`.
    pub mean: f64,
    /// `T·P_T f(1)`.
    pub mean_identity: f64,
    /// `|log μ(0)|`.
    pub log_const: f64,
    /// `μ(1)/μ(0)`.
    pub ratio_const: f64,
    /// `T − ln f(0)`.
    pub log_identity: f64,
    /// `∫₀ᵀ e^{DF(t,0)} dt` by Simpson quadrature.
    pub integrated_ratio: f64,
    pub mean_identity_ok: bool,
    pub log_identity_ok: bool,
    pub quadrature_ok: bool,
    /// `log_const − mean`.
    pub lower_slack: f64,
    /// `ratio_const − log_const`.
    pub upper_slack: f64,
    pub passed: bool,
}

impl ConstantChain {
    /// Chain slacks as inequality reports (`E[μ] ≤ |log μ(0)|`, `|log μ(0)| ≤ μ(1)/μ(0)`).
    pub fn reports(&self) -> [InequalityReport; 2] {
        [
            InequalityReport::new("mean <= |log mu(0)|", self.mean, self.log_const, 1.0, DEFAULT_REL_TOL),
            InequalityReport::new("|log mu(0)| <= mu(1)/mu(0)", self.log_const, self.ratio_const, 1.0, DEFAULT_REL_TOL),
        ]
    }
}

pub fn constant_chain(target: &UlcMeasure) -> Result<ConstantChain> {
    let eval = SemigroupEvaluator::for_target(target);
    let horizon = target.horizon();
    let mean = target.mean();
    let mean_identity = if target.support_top() == 0 { 0.0 } else { horizon * eval.ln_apply(horizon, 1).exp() };
    let log_const = target.log_constant();
    let ratio_const = target.ratio_constant();
    let log_identity = horizon - target.density().get(0).ln();
    let integrated_ratio = eval.integrated_intensity(QUADRATURE_HALF_INTERVALS);
    if !integrated_ratio.is_finite() {
        return Err(Error::IntegrationDiverged { t: horizon, sum: integrated_ratio });
    }
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
    let mean_identity_ok = close(mean, mean_identity, IDENTITY_TOL);
    let log_identity_ok = close(log_const, log_identity, IDENTITY_TOL);
    let quadrature_ok = close(log_const, integrated_ratio, QUADRATURE_TOL);
    let [lower, upper] = [
        InequalityReport::new("", mean, log_const, 1.0, DEFAULT_REL_TOL),
        InequalityReport::new("", log_const, ratio_const, 1.0, DEFAULT_REL_TOL),
    ];
    Ok(ConstantChain {
        mean,
        mean_identity,
        log_const,
        ratio_const,
        log_identity,
        integrated_ratio,
        mean_identity_ok,
        log_identity_ok,
        quadrature_ok,
        lower_slack: lower.slack,
        upper_slack: upper.slack,
        passed: mean_identity_ok && log_identity_ok && quadrature_ok && lower.passed && upper.passed,
    })
}

const CERTIFY_GRID: usize = 200;

/// Box `[u_lo, u_hi] × [v_lo, v_hi]` over which `Ψ` is certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertBox {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

/// A convex `Φ` together with its grid-certified admissibility.
#[derive(Clone)]
pub struct PhiSpec {
    phi: Arc<dyn ConvexFunction>,
    cert_box: CertBox,
    admissible: bool,
    /// Grid points rejected by the certification, `(u, v, reason)`.
    failures: Vec<(f64, f64, &'static str)>,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiSpec")
            .field("name", &self.phi.name())
            .field("domain", &self.phi.domain())
            .field("cert_box", &self.cert_box)
            .field("admissible", &self.admissible)
            .finish()
    }
}

impl PhiSpec {
    /// Certifies `Ψ ≥ 0` and midpoint convexity on a 200×200 grid of `cert_box`
    /// (points with `u` or `u+v` outside the domain are skipped).
    pub fn certify(phi: Arc<dyn ConvexFunction>, cert_box: CertBox) -> Self {
        let domain = phi.domain();
        let n = CERTIFY_GRID;
        let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mut psi = vec![f64::NAN; n * n];
        for i in 0..n {
            let u = at(cert_box.u, i);
            for j in 0..n {
                let v = at(cert_box.v, j);
                if domain.contains(u) && domain.contains(u + v) {
                    psi[i * n + j] = phi.bregman(u, v);
                }
            }
        }
        let mut failures = Vec::new();
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let p = psi[i * n + j];
                if p.is_nan() {
                    continue;
                }
                let (u, v) = (at(cert_box.u, i), at(cert_box.v, j));
                if p < -tol(p) {
                    failures.push((u, v, "negative"));
                    continue;
                }
                'dirs: for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                    for scale in [1i64, 4, 16] {
                        let (a, b) = (i as i64 - scale * di, j as i64 - scale * dj);
                        let (c, d) = (i as i64 + scale * di, j as i64 + scale * dj);
                        let inside = |x: i64| (0..n as i64).contains(&x);
                        if !(inside(a) && inside(b) && inside(c) && inside(d)) {
                            continue;
                        }
                        let lo = psi[a as usize * n + b as usize];
                        let hi = psi[c as usize * n + d as usize];
                        if lo.is_nan() || hi.is_nan() {
                            continue;
                        }
                        let chord = 0.5 * (lo + hi);
                        if p > chord + tol(chord) {
                            failures.push((u, v, "not midpoint-convex"));
                            break 'dirs;
                        }
                    }
                }
            }
        }
        PhiSpec { phi, cert_box, admissible: failures.is_empty(), failures }
    }

    /// `Φ(u) = u log u` certified on `u ∈ [0.01, 10]`, `v ∈ [−10, 10]`.
    pub fn entropy() -> Self {
        Self::certify(Arc::new(XLogX), CertBox { u: (0.01, 10.0), v: (-10.0, 10.0) })
    }

    /// `Φ(u) = u²` certified on `[−10, 10]²`.
    pub fn square() -> Self {
        Self::certify(Arc::new(Square), CertBox { u: (-10.0, 10.0), v: (-10.0, 10.0) })
    }

    pub fn name(&self) -> &str {
        self.phi.name()
    }

    pub fn domain(&self) -> Interval {
        self.phi.domain()
    }

    pub fn phi(&self) -> &dyn ConvexFunction {
        self.phi.as_ref()
    }

    pub fn cert_box(&self) -> CertBox {
        self.cert_box
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn failures(&self) -> &[(f64, f64, &'static str)] {
        &self.failures
    }

    pub fn psi(&self, u: f64, v: f64) -> f64 {
        self.phi.bregman(u, v)
    }
}

fn require_len(target: &UlcMeasure, g: &[f64]) -> Result<usize> {
    let top = target.support_top();
    if g.len() < top + 2 {
        return Err(Error::LengthMismatch { expected: top + 2, got: g.len() });
    }
    if let Some(k) = g[..top + 2].iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index: k, value: g[k] });
    }
    Ok(top)
}

/// `E_μ[Ψ(g, Dg)]` for the given remainder.
fn expected_remainder(target: &UlcMeasure, g: &[f64], psi: impl Fn(f64, f64) -> Result<f64>) -> Result<f64> {
    let top = target.support_top();
    let mut terms = Vec::with_capacity(top + 1);
    for k in 0..=top {
        let w = target.weight(k);
        if w > 0.0 {
            terms.push(w * psi(g[k], g[k + 1] - g[k])?);
        }
    }
    Ok(compensated_sum(terms))
}

/// Modified log-Sobolev inequality `Ent_μ(g) ≤ C·E_μ[Ψ(g, Dg)]` with the
/// constants `|log μ(0)|` and `μ(1)/μ(0)` (asserted) and `E[μ]` (report only).
pub fn mlsi_check(target: &UlcMeasure, g: &[f64]) -> Result<[InequalityReport; 3]> {
    let top = require_len(target, g)?;
    if let Some(k) = g[..top + 2].iter().position(|&x| x <= 0.0) {
        return Err(Error::DomainViolation { index: k, value: g[k] });
    }
    let ent = phi_entropy(target.pv(), g, &XLogX)?;
    let energy = expected_remainder(target, g, psi_mlsi)?;
    let report = |name: &str, c: f64| InequalityReport::new(name, ent, c * energy, c, DEFAULT_REL_TOL);
    Ok([
        report("mlsi |log mu(0)|", target.log_constant()),
        report("mlsi mu(1)/mu(0)", target.ratio_constant()),
        report("mlsi E[mu]", target.mean()).report_only(),
    ])
}

/// `Ent^Φ_μ(g) ≤ |log μ(0)|·E_μ[Ψ(g, Dg)]`.
pub fn phi_sobolev_check(target: &UlcMeasure, g: &[f64], phi: &PhiSpec) -> Result<InequalityReport> {
    if !phi.is_admissible() {
        let (u, v, _) = phi.failures()[0];
        return Err(Error::InvalidParameter {
            name: "phi (not admissible at u)",
            value: if u.is_nan() { v } else { u },
        });
    }
    let top = require_len(target, g)?;
    let domain = phi.domain();
    for (k, &x) in g.iter().enumerate().take(top + 2) {
        let reachable = target.weight(k) > 0.0 || (k > 0 && target.weight(k - 1) > 0.0);
        if reachable && !domain.contains(x) {
            return Err(Error::DomainViolation { index: k, value: x });
        }
    }
    let ent = phi_entropy(target.pv(), g, phi.phi())?;
    let energy = expected_remainder(target, g, |u, v| Ok(phi.psi(u, v)))?;
    let c = target.log_constant();
    Ok(InequalityReport::new(format!("phi-sobolev {}", phi.name()), ent, c * energy, c, DEFAULT_REL_TOL))
}

/// Fraser–Johnson Poincaré inequality `Var_μ(g) ≤ E[μ]·E_μ[(Dg)²]`.
pub fn poincare_fj_check(target: &UlcMeasure, g: &[f64]) -> Result<InequalityReport> {
    require_len(target, g)?;
    let var = phi_entropy(target.pv(), g, &Square)?;
    let energy = expected_remainder(target, g, |_, v| Ok(v * v))?;
    let c = target.mean();
    Ok(InequalityReport::new("poincare E[mu]", var, c * energy, c, DEFAULT_REL_TOL))
}

/// `α_{TM}(W₁(ν,μ)) ≤ H(ν|μ)`, with the `|log μ(0)|` variant attached as the
/// diagnostics `alpha_log_const` and `log_const_slack`.
pub fn transport_entropy_check(target: &UlcMeasure, nu: &ProbabilityVector) -> Result<InequalityReport> {
    let h = relative_entropy(nu, target.pv())?;
    let w1 = wasserstein1(nu, target.pv());
    let tm = target.ratio_constant();
    let lc = target.log_constant();
    let (lhs, improved) = if target.support_top() == 0 { (0.0, 0.0) } else { (alpha_c(tm, w1)?, alpha_c(lc, w1)?) };
    Ok(InequalityReport::new("transport-entropy TM", lhs, h, tm, DEFAULT_REL_TOL)
        .with_diagnostic("w1", w1)
        .with_diagnostic("alpha_log_const", improved)
        .with_diagnostic("log_const_slack", h - improved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::FnPhi;
    use approx::assert_abs_diff_eq;

    #[test]
    fn poisson_chain_collapses_to_t() {
        let c = constant_chain(&UlcMeasure::poisson(1.0).unwrap()).unwrap();
        for v in [c.mean, c.mean_identity, c.log_const, c.ratio_const] {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
        }
        assert!(c.passed);
    }

    #[test]
    fn bernoulli_chain() {
        let c = constant_chain(&UlcMeasure::bernoulli(0.5, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(c.mean, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.mean_identity, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c.log_const, std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c.ratio_const, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.integrated_ratio, std::f64::consts::LN_2, epsilon = 1e-10);
        assert!(c.passed);
    }

    #[test]
    fn mlsi_bernoulli_two_point() {
        let mu = UlcMeasure::bernoulli(0.5, 1.0).unwrap();
        let [a, b, c] = mlsi_check(&mu, &[1.0, 2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(a.lhs, 0.08494951839769874, epsilon = 1e-14);
        // Ψ(1,1)/2 = (2 ln 2 − 1)/2, and g is flat past the top.
        assert_abs_diff_eq!(a.rhs, std::f64::consts::LN_2 * 0.3862943611198906 / 2.0, epsilon = 1e-14);
        assert!(a.passed && b.passed && !c.asserted);
        assert!(b.rhs >= a.rhs);
    }

    #[test]
    fn mlsi_constant_g_is_trivial() {
        let mu = UlcMeasure::binomial(3, 0.5, 1.0).unwrap();
        for r in mlsi_check(&mu, &[2.0; 5]).unwrap() {
            assert_abs_diff_eq!(r.lhs, 0.0, epsilon = 1e-15);
            assert_eq!(r.rhs, 0.0);
            assert!(r.passed);
        }
    }

    #[test]
    fn mlsi_rejects_nonpositive_and_short_g() {
        let mu = UlcMeasure::bernoulli(0.5, 1.0).unwrap();
        assert!(matches!(mlsi_check(&mu, &[1.0, 0.0, 1.0]), Err(Error::DomainViolation { index: 1, .. })));
        assert!(matches!(mlsi_check(&mu, &[1.0, 1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn square_phi_is_variance_form() {
        let mu = UlcMeasure::binomial(3, 0.5, 1.0).unwrap();
        let g = [0.3, -1.0, 2.0, 0.5, 4.0];
        let r = phi_sobolev_check(&mu, &g, &PhiSpec::square()).unwrap();
        let w = mu.pv().weights();
        let mean: f64 = (0..4).map(|k| w[k] * g[k]).sum();
        let var: f64 = (0..4).map(|k| w[k] * (g[k] - mean).powi(2)).sum();
        let energy: f64 = (0..4).map(|k| w[k] * (g[k + 1] - g[k]).powi(2)).sum();
        assert_abs_diff_eq!(r.lhs, var, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, mu.log_constant() * energy, epsilon = 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn entropy_phi_reproduces_mlsi() {
        let mu = UlcMeasure::binomial(4, 0.3, 2.0).unwrap();
        let g = [0.5, 1.5, 0.2, 3.0, 1.0, 2.0];
        let a = phi_sobolev_check(&mu, &g, &PhiSpec::entropy()).unwrap();
        let [b, ..] = mlsi_check(&mu, &g).unwrap();
        assert_abs_diff_eq!(a.lhs, b.lhs, epsilon = 1e-14);
        assert_abs_diff_eq!(a.rhs, b.rhs, epsilon = 1e-12);
    }

    #[test]
    fn nonconvex_phi_is_not_admissible() {
        let phi = FnPhi::new("u^3", Interval::REAL_LINE, |u| u * u * u, |u| 3.0 * u * u);
        let spec = PhiSpec::certify(Arc::new(phi), CertBox { u: (-1.0, 1.0), v: (-1.0, 1.0) });
        assert!(!spec.is_admissible());
        let mu = UlcMeasure::bernoulli(0.5, 1.0).unwrap();
        assert!(phi_sobolev_check(&mu, &[1.0, 2.0, 3.0], &spec).is_err());
    }

    #[test]
    fn standard_phis_are_admissible() {
        assert!(PhiSpec::entropy().is_admissible());
        assert!(PhiSpec::square().is_admissible());
        // 1/Φ'' concave makes Ψ jointly convex.
        let power = FnPhi::new("u^1.5", Interval::NONNEGATIVE, |u| u.powf(1.5), |u| 1.5 * u.sqrt());
        assert!(PhiSpec::certify(Arc::new(power), CertBox { u: (0.01, 5.0), v: (-5.0, 5.0) }).is_admissible());
    }

    #[test]
    fn phi_domain_violation_reports_index() {
        let mu = UlcMeasure::binomial(2, 0.5, 1.0).unwrap();
        let err = phi_sobolev_check(&mu, &[1.0, 1.0, 1.0, -0.5], &PhiSpec::entropy()).unwrap_err();
        assert_eq!(err, Error::DomainViolation { index: 3, value: -0.5 });
    }

    #[test]
    fn poincare_equality_for_identity_under_poisson() {
        let mu = UlcMeasure::poisson(1.0).unwrap();
        let g: Vec<f64> = (0..mu.support_top() + 2).map(|k| k as f64).collect();
        let r = poincare_fj_check(&mu, &g).unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-8);
        assert!(r.passed);
    }

    #[test]
    fn transport_entropy_bernoulli() {
        let mu = UlcMeasure::bernoulli(0.5, 1.0).unwrap();
        let nu = ProbabilityVector::new(vec![0.9, 0.1]).unwrap();
        let r = transport_entropy_check(&mu, &nu).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.07106113126969796, epsilon = 1e-14);
        assert_abs_diff_eq!(r.rhs, 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.diagnostics[0].1, 0.4, epsilon = 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn transport_entropy_self_is_zero() {
        let mu = UlcMeasure::binomial(5, 0.4, 1.5).unwrap();
        let r = transport_entropy_check(&mu, mu.pv()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_abs_diff_eq!(r.rhs, 0.0, epsilon = 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn transport_entropy_requires_absolute_continuity() {
        let mu = UlcMeasure::bernoulli(0.5, 1.0).unwrap();
        let nu = ProbabilityVector::dirac(2);
        assert!(matches!(transport_entropy_check(&mu, &nu), Err(Error::SupportViolation { index: 2 })));
    }
}
