//! Probability measures on ℕ and the ultra-log-concave structure.

mod divergence;
mod phi;
mod poisson;
mod text;

pub use divergence::{alpha_c, convolve, phi_entropy, psi_mlsi, relative_entropy, wasserstein1};
pub use phi::{ConvexFunction, FnPhi, Interval, Square, XLogX};
pub use poisson::{ln_poisson_pmf, poisson_pmf, poisson_truncation_point};
pub use text::{parse_measure, write_measure};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, log_sum_exp};
use crate::report::CheckReport;

/// Normalization tolerance for probability vectors.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Log-space tolerance for the log-concavity and ULC inequalities.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Dropped tail mass when truncating infinite-support targets.
pub const TRUNCATION_TAIL: f64 = 1e-14;

/// Finitely supported probability vector on `{0,…,N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum = compensated_sum(weights.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(ProbabilityVector { weights })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum = compensated_sum(weights.iter().copied());
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::ZeroMass);
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn dirac(k: usize) -> Self {
        let mut weights = vec![0.0; k + 1];
        weights[k] = 1.0;
        ProbabilityVector { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `μ(k)`, zero beyond the stored range.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(0.0)
    }

    /// Largest `k` with positive weight.
    pub fn support_top(&self) -> usize {
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// First `k` breaking the "integer interval containing 0" shape, if any.
    pub fn support_gap(&self) -> Option<usize> {
        if self.weights[0] <= 0.0 {
            return Some(0);
        }
        let top = self.support_top();
        self.weights[..=top].iter().position(|&w| w <= 0.0)
    }

    pub fn has_contiguous_support(&self) -> bool {
        self.support_gap().is_none()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.weights.iter().enumerate().map(|(k, &w)| k as f64 * w))
    }

    /// Expectation of `g` under the measure; `g` must cover the stored range.
    pub fn expect(&self, g: &[f64]) -> f64 {
        compensated_sum(self.weights.iter().zip(g).filter(|(w, _)| **w > 0.0).map(|(w, x)| w * x))
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }
}

/// Positive sequence `f(0..=N_f)` with implicit zeros beyond `N_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcaveFn {
    values: Vec<f64>,
}

impl LogConcaveFn {
    /// Validates positivity and log-concavity.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let report = check_log_concave(&values)?;
        if let Some(index) = report.first_violation {
            return Err(Error::NotLogConcave { index });
        }
        Ok(LogConcaveFn { values })
    }

    /// Builds `f = exp(V)` from log-values.
    pub fn from_log_values(log_values: &[f64]) -> Result<Self> {
        Self::new(log_values.iter().map(|v| v.exp()).collect())
    }

    pub fn constant(len: usize) -> Self {
        LogConcaveFn { values: vec![1.0; len.max(1)] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `N_f`, the last index with positive value.
    pub fn top(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    fn scaled(&self, factor: f64) -> LogConcaveFn {
        LogConcaveFn { values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Checks `f(k)² ≥ f(k−1)f(k+1)` at every interior `k`, with `f(N_f+1) = 0`.
///
/// Comparison happens in log space with absolute tolerance [`STRUCTURE_TOL`].
pub fn check_log_concave(values: &[f64]) -> Result<CheckReport> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value <= 0.0 {
            return Err(Error::NonPositive { index, value });
        }
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(check_log_concave_logs(&logs, STRUCTURE_TOL))
}

/// Log-concavity of a sequence given by its logarithms.
pub fn check_log_concave_logs(logs: &[f64], tol: f64) -> CheckReport {
    let mut report = CheckReport::new("log-concave");
    for k in 1..logs.len().saturating_sub(1) {
        let margin = 2.0 * logs[k] - logs[k - 1] - logs[k + 1];
        report.record(k, margin, tol);
    }
    report
}

/// Checks `μ(k)² ≥ ((k+1)/k)·μ(k+1)·μ(k−1)` for all `k ≥ 1`.
pub fn check_ulc(mu: &ProbabilityVector) -> CheckReport {
    let mut report = CheckReport::new("ultra-log-concave");
    let w = mu.weights();
    for k in 1..w.len() {
        let (prev, cur, next) = (w[k - 1], w[k], mu.weight(k + 1));
        if prev == 0.0 || next == 0.0 {
            report.record(k, f64::INFINITY, STRUCTURE_TOL);
            continue;
        }
        if cur == 0.0 {
            report.record(k, f64::NEG_INFINITY, STRUCTURE_TOL);
            continue;
        }
        let kf = k as f64;
        let margin = 2.0 * cur.ln() - ((kf + 1.0) / kf).ln() - next.ln() - prev.ln();
        report.record(k, margin, STRUCTURE_TOL);
    }
    report
}

/// Ultra-log-concave measure `μ = f·π_T` with `P_T f(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlcMeasure {
    pv: ProbabilityVector,
    horizon: f64,
    density: LogConcaveFn,
}

impl UlcMeasure {
    /// `ulc_from_f`: rescales `f` so that `P_T f(0) = 1` and returns `f·π_T`.
    pub fn from_density(f: &LogConcaveFn, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let ln_terms: Vec<f64> =
            f.values().iter().enumerate().map(|(k, v)| v.ln() + ln_poisson_pmf(horizon, k)).collect();
        let ln_mass = log_sum_exp(ln_terms.iter().copied());
        if !ln_mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        let weights: Vec<f64> = ln_terms.iter().map(|t| (t - ln_mass).exp()).collect();
        let pv = ProbabilityVector::from_unnormalized(weights)?;
        let density = f.scaled((-ln_mass).exp());
        Ok(UlcMeasure { pv, horizon, density })
    }

    /// Builds the measure from its weights, recovering `f = μ/π_T` on the support.
    pub fn from_pv(pv: ProbabilityVector, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if let Some(index) = pv.support_gap() {
            return Err(Error::NonContiguousSupport { index });
        }
        if let Some(index) = check_ulc(&pv).first_violation {
            return Err(Error::NotUltraLogConcave { index });
        }
        let top = pv.support_top();
        let values = (0..=top).map(|k| (pv.weight(k).ln() - ln_poisson_pmf(horizon, k)).exp()).collect();
        let weights = pv.weights()[..=top].to_vec();
        Ok(UlcMeasure { pv: ProbabilityVector { weights }, horizon, density: LogConcaveFn { values } })
    }

    /// `π_T` truncated where the dropped tail is at most [`TRUNCATION_TAIL`].
    pub fn poisson(horizon: f64) -> Result<Self> {
        let n = poisson_truncation_point(horizon, TRUNCATION_TAIL)?;
        Self::from_density(&LogConcaveFn::constant(n + 1), horizon)
    }

    pub fn binomial(n: usize, p: f64, horizon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter { name: "p", value: p });
        }
        if p == 0.0 {
            return Self::from_pv(ProbabilityVector::dirac(0), horizon);
        }
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        let ln_fact = crate::numeric::ln_factorial;
        let weights = (0..=n)
            .map(|k| (ln_fact(n) - ln_fact(k) - ln_fact(n - k) + k as f64 * ln_p + (n - k) as f64 * ln_q).exp())
            .collect();
        Self::from_pv(ProbabilityVector::from_unnormalized(weights)?, horizon)
    }

    pub fn bernoulli(p: f64, horizon: f64) -> Result<Self> {
        Self::binomial(1, p, horizon)
    }

    pub fn pv(&self) -> &ProbabilityVector {
        &self.pv
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `ulc_to_f`: the normalized density `f` with `μ = f·π_T`.
    pub fn density(&self) -> &LogConcaveFn {
        &self.density
    }

    pub fn support_top(&self) -> usize {
        self.density.top()
    }

    /// `M = f(1)/f(0)`, the height of the driving rectangle.
    pub fn height(&self) -> f64 {
        self.density.get(1) / self.density.get(0)
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.pv.weight(k)
    }

    pub fn mean(&self) -> f64 {
        self.pv.mean()
    }

    /// `|log μ(0)|`.
    pub fn log_constant(&self) -> f64 {
        -self.pv.weight(0).ln()
    }

    /// `μ(1)/μ(0) = T·M`.
    pub fn ratio_constant(&self) -> f64 {
        self.pv.weight(1) / self.pv.weight(0)
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "T", value: horizon })
    }
}
