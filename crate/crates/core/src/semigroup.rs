//! The Poisson semigroup `P_t g(k) = Σₙ g(k+n)π_t(n)`, the potential
//! `F(t,k) = log P_{T−t}f(k)`, and the discrete Fokker–Planck flow of the
//! driven counting process.
//!
//! Densities have finite support, so every semigroup value is an exact
//! finite sum. All sums run in log space.

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::measures::{check_log_concave_logs, ln_poisson_pmf, LogConcaveFn, UlcMeasure, STRUCTURE_TOL};
use crate::numeric::{ln_factorial, simpson};
use crate::report::CheckReport;

/// Time buckets per horizon; `t` is snapped to `T·round(t/T·1e9)/1e9`.
pub const TIME_BUCKETS: f64 = 1e9;
const CACHE_CAPACITY: usize = 1 << 20;

/// `ln P_s g(k)` for a sequence given by its logarithms (`-∞` for zeros).
fn ln_apply_logs(ln_g: &[f64], s: f64, k: usize) -> f64 {
    if k >= ln_g.len() {
        return f64::NEG_INFINITY;
    }
    if s == 0.0 {
        return ln_g[k];
    }
    let ln_s = s.ln();
    let term = |n: usize| ln_g[k + n] - s + n as f64 * ln_s - ln_factorial(n);
    let count = ln_g.len() - k;
    let max = (0..count).map(term).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut sum = 0.0;
    for n in 0..count {
        sum += (term(n) - max).exp();
    }
    max + sum.ln()
}

/// `P_t g(k)`, an exact finite sum over the stored range of `g`.
///
/// Returns `0` for `k` beyond the stored range.
pub fn semigroup_apply(g: &[f64], t: f64, k: usize) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::NonFinite { index, value });
    }
    if t == 0.0 {
        return Ok(g.get(k).copied().unwrap_or(0.0));
    }
    let ln_g: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    Ok(ln_apply_logs(&ln_g, t, k).exp())
}

/// Central-difference residual of `∂_t P_t f(k) = D(P_t f)(k)`.
pub fn verify_semigroup_pde(f: &[f64], t: f64, k: usize, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter { name: "h", value: h });
    }
    if t - h < 0.0 {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    let forward = semigroup_apply(f, t + h, k)?;
    let backward = semigroup_apply(f, t - h, k)?;
    let derivative = semigroup_apply(f, t, k + 1)? - semigroup_apply(f, t, k)?;
    Ok(((forward - backward) / (2.0 * h) - derivative).abs())
}

/// `P_t f` stays log-concave.
pub fn verify_lc_preserved(f: &LogConcaveFn, t: f64) -> Result<CheckReport> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    let ln_f: Vec<f64> = f.values().iter().map(|v| v.ln()).collect();
    let logs: Vec<f64> = (0..ln_f.len()).map(|k| ln_apply_logs(&ln_f, t, k)).collect();
    let mut report = check_log_concave_logs(&logs, STRUCTURE_TOL);
    report.name = "P_t preserves log-concavity".into();
    Ok(report)
}

/// Evaluates `P_{T−t}f`, `F(t,k)` and `DF(t,k)` for a fixed density and horizon.
///
/// Times are snapped to a grid of [`TIME_BUCKETS`] per horizon before
/// evaluation, so memoized values are a pure function of the key.
#[derive(Debug)]
pub struct SemigroupEvaluator {
    ln_f: Vec<f64>,
    horizon: f64,
    cache: DashMap<(u64, usize), f64>,
}

impl Clone for SemigroupEvaluator {
    fn clone(&self) -> Self {
        SemigroupEvaluator::new(&LogConcaveFn::from_log_values(&self.ln_f).unwrap(), self.horizon)
            .expect("cloned evaluator has a valid horizon")
    }
}

impl SemigroupEvaluator {
    pub fn new(f: &LogConcaveFn, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter { name: "T", value: horizon });
        }
        Ok(SemigroupEvaluator { ln_f: f.values().iter().map(|v| v.ln()).collect(), horizon, cache: DashMap::new() })
    }

    pub fn for_target(target: &UlcMeasure) -> Self {
        Self::new(target.density(), target.horizon()).expect("targets carry a valid horizon")
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `N_f`.
    pub fn top(&self) -> usize {
        self.ln_f.len() - 1
    }

    pub fn ln_density(&self) -> &[f64] {
        &self.ln_f
    }

    /// Bucket index and snapped time for `t ∈ [0, T]`.
    pub fn snap(&self, t: f64) -> (u64, f64) {
        let frac = (t / self.horizon).clamp(0.0, 1.0);
        let bucket = (frac * TIME_BUCKETS).round();
        (bucket as u64, self.horizon * (bucket / TIME_BUCKETS))
    }

    /// `ln P_s f(k)` at an exact (unsnapped) semigroup time `s ≥ 0`.
    pub fn ln_apply(&self, s: f64, k: usize) -> f64 {
        ln_apply_logs(&self.ln_f, s, k)
    }

    /// `F(t,k) = ln P_{T−t}f(k)`.
    pub fn potential(&self, t: f64, k: usize) -> f64 {
        let (bucket, snapped) = self.snap(t);
        if let Some(v) = self.cache.get(&(bucket, k)) {
            return *v;
        }
        let value = self.ln_apply((self.horizon - snapped).max(0.0), k);
        if self.cache.len() < CACHE_CAPACITY {
            self.cache.insert((bucket, k), value);
        }
        value
    }

    /// `DF(t,k) = F(t,k+1) − F(t,k)`; `-∞` once `k+1` leaves the support.
    pub fn potential_df(&self, t: f64, k: usize) -> Result<f64> {
        let top = self.top();
        if k > top {
            return Err(Error::BeyondSupport { k, top });
        }
        if k == top {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.potential(t, k + 1) - self.potential(t, k))
    }

    /// `λ(t,k) = e^{DF(t,k)}`, zero at and beyond the support top.
    pub fn intensity(&self, t: f64, k: usize) -> f64 {
        self.potential_df(t, k).map(f64::exp).unwrap_or(0.0)
    }

    /// Law of `X_t` in closed form, `(P_{T−t}f)(k)·π_t(k)` for `k ≤ cap`.
    pub fn closed_form_marginal(&self, t: f64, cap: usize) -> Vec<f64> {
        let s = (self.horizon - t).max(0.0);
        (0..=cap).map(|k| (self.ln_apply(s, k) + ln_poisson_pmf(t, k)).exp()).collect()
    }

    /// `t ↦ P_{T−t}f(k+1)/P_{T−t}f(k)` is non-decreasing along `grid`.
    pub fn verify_ratio_monotone(&self, k: usize, grid: &[f64]) -> CheckReport {
        let mut report = CheckReport::new(format!("ratio monotone k={k}"));
        if k >= self.top() {
            return report;
        }
        let dfs: Vec<f64> = grid.iter().map(|&t| self.potential_df(t, k).unwrap()).collect();
        for (i, w) in dfs.windows(2).enumerate() {
            report.record(i + 1, w[1] - w[0], STRUCTURE_TOL);
        }
        report
    }

    /// `P_{T−t}f(1)/P_{T−t}f(0) ≤ f(1)/f(0) = M` along `grid`.
    pub fn verify_ratio_bound(&self, grid: &[f64]) -> CheckReport {
        let mut report = CheckReport::new("ratio bound");
        if self.top() == 0 {
            return report;
        }
        let ln_m = self.ln_f[1] - self.ln_f[0];
        for (i, &t) in grid.iter().enumerate() {
            report.record(i, ln_m - self.potential_df(t, 0).unwrap(), STRUCTURE_TOL);
        }
        report
    }

    /// `∫₀ᵀ e^{DF(t,0)} dt` by composite Simpson.
    pub fn integrated_intensity(&self, half_intervals: usize) -> f64 {
        if self.top() == 0 {
            return 0.0;
        }
        let ln_f = &self.ln_f;
        let horizon = self.horizon;
        simpson(
            |t| {
                let s = (horizon - t).max(0.0);
                (ln_apply_logs(ln_f, s, 1) - ln_apply_logs(ln_f, s, 0)).exp()
            },
            0.0,
            horizon,
            half_intervals,
        )
    }

    /// Integrates `∂_t μ_t(k) = −D[e^{DF(t,k−1)} μ_t(k−1)]` from `μ₀ = δ₀`
    /// with classical RK4, recording the state at each grid time.
    pub fn fokker_planck(&self, grid: &[f64], cap: usize, step: f64) -> Result<MarginalCurve> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter { name: "step", value: step });
        }
        if grid.first() != Some(&0.0) {
            return Err(Error::InvalidParameter { name: "grid[0]", value: grid.first().copied().unwrap_or(f64::NAN) });
        }
        if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter { name: "grid", value: w[1] });
        }
        let cap = cap.max(self.top());
        let mut state = vec![0.0; cap + 1];
        state[0] = 1.0;
        let mut rows = vec![state.clone()];
        for w in grid.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let steps = ((t1 - t0) / step).round().max(1.0) as usize;
            let h = (t1 - t0) / steps as f64;
            for i in 0..steps {
                let t = t0 + i as f64 * h;
                self.rk4_step(&mut state, t, h);
            }
            // Flux form conserves the signed sum, so judge the L1 mass instead.
            let sum: f64 = state.iter().map(|m| m.abs()).sum();
            if (sum - 1.0).abs() > 1e-6 || !sum.is_finite() {
                return Err(Error::IntegrationDiverged { t: t1, sum });
            }
            rows.push(state.clone());
        }
        Ok(MarginalCurve { grid: grid.to_vec(), rows })
    }

    fn drift(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let mut inflow = 0.0;
        for (k, (&mass, slot)) in state.iter().zip(out.iter_mut()).enumerate() {
            let outflow = if k < self.top() { self.intensity(t, k) * mass } else { 0.0 };
            *slot = inflow - outflow;
            inflow = outflow;
        }
    }

    fn rk4_step(&self, state: &mut [f64], t: f64, h: f64) {
        let n = state.len();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.drift(t, state, &mut k1);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * h * k1[i];
        }
        self.drift(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * h * k2[i];
        }
        self.drift(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = state[i] + h * k3[i];
        }
        self.drift(t + h, &tmp, &mut k4);
        for i in 0..n {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Time marginals `μ_t` of the driven process on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCurve {
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl MarginalCurve {
    /// Sup-norm distance to `(P_{T−t}f)π_t` over all grid rows.
    pub fn sup_error(&self, eval: &SemigroupEvaluator) -> f64 {
        self.grid
            .iter()
            .zip(&self.rows)
            .map(|(&t, row)| {
                let exact = eval.closed_form_marginal(t, row.len() - 1);
                row.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Default RK4 run: step `1e−3·T`, states `{0,…,N_f + 5}`.
pub fn fokker_planck_evolve(eval: &SemigroupEvaluator, grid: &[f64]) -> Result<MarginalCurve> {
    eval.fokker_planck(grid, eval.top() + 5, 1e-3 * eval.horizon())
}

/// `m + 1` evenly spaced times on `[0, T]`.
pub fn uniform_grid(horizon: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| horizon * (i as f64 / m as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bernoulli_eval() -> SemigroupEvaluator {
        let e = std::f64::consts::E;
        SemigroupEvaluator::new(&LogConcaveFn::new(vec![e / 2.0, e / 2.0]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn constant_is_fixed_point() {
        let ones = vec![1.0; 30];
        for &t in &[0.0, 0.3, 2.0] {
            assert_abs_diff_eq!(
                semigroup_apply(&ones, t, 0).unwrap(),
                1.0,
                epsilon = if t > 1.0 { 1e-9 } else { 1e-14 }
            );
        }
        let f = LogConcaveFn::constant(6);
        let eval = SemigroupEvaluator::new(&f, 1.0).unwrap();
        assert!(eval.potential_df(0.9999, 0).unwrap() < 1e-3);
        assert_eq!(eval.potential_df(1.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn identity_at_time_zero() {
        let f = [0.3, 1.7, 2.2, 0.1];
        for (k, &v) in f.iter().enumerate() {
            assert_eq!(semigroup_apply(&f, 0.0, k).unwrap(), v);
        }
        assert_eq!(semigroup_apply(&f, 1.0, 9).unwrap(), 0.0);
        assert!(semigroup_apply(&f, -0.1, 0).is_err());
    }

    #[test]
    fn linear_function_shifts_by_t() {
        let n = 60usize;
        let g: Vec<f64> = (0..=n).map(|k| k as f64).collect();
        for &t in &[0.1, 0.5, 1.3] {
            for k in [0usize, 3, 10] {
                let dropped: f64 = (n - k + 1..n - k + 200).map(|m| (k + m) as f64 * ln_poisson_pmf(t, m).exp()).sum();
                let exact = k as f64 + t - dropped;
                assert_abs_diff_eq!(semigroup_apply(&g, t, k).unwrap(), exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bernoulli_intensity_is_half_at_start() {
        let eval = bernoulli_eval();
        assert_abs_diff_eq!(eval.intensity(0.0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(eval.intensity(0.2, 0), 1.0 / 1.8, epsilon = 1e-9);
        assert_eq!(eval.intensity(0.5, 1), 0.0);
        assert_eq!(eval.potential_df(0.5, 1).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(eval.potential_df(0.5, 2), Err(Error::BeyondSupport { .. })));
    }

    #[test]
    fn df_at_horizon_reads_density() {
        let f = LogConcaveFn::new(vec![2.0, 1.5, 0.5]).unwrap();
        let eval = SemigroupEvaluator::new(&f, 3.0).unwrap();
        assert_abs_diff_eq!(eval.potential_df(3.0, 0).unwrap(), (0.75f64).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(eval.potential_df(3.0, 1).unwrap(), (1.0f64 / 3.0).ln(), epsilon = 1e-15);
    }

    #[test]
    fn pde_residual_vanishes_for_constant_and_shrinks_quadratically() {
        assert!(verify_semigroup_pde(&[1.0; 40], 1.0, 2, 1e-3).unwrap() < 1e-10);
        let f = [1.0, 2.0, 2.5, 2.2, 1.0, 0.3];
        let r1 = verify_semigroup_pde(&f, 0.7, 1, 2e-3).unwrap();
        let r2 = verify_semigroup_pde(&f, 0.7, 1, 1e-3).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio={ratio}");
        assert!(verify_semigroup_pde(&f, 0.7, 1, 1e-4).unwrap() < 1e-6);
        assert!(verify_semigroup_pde(&f, 0.7, 1, 0.0).is_err());
    }

    #[test]
    fn ratio_monotone_examples() {
        let grid = uniform_grid(1.0, 50);
        let flat = SemigroupEvaluator::new(&LogConcaveFn::constant(30), 1.0).unwrap();
        assert!(flat.verify_ratio_monotone(0, &grid).passed);
        let eval = bernoulli_eval();
        let report = eval.verify_ratio_monotone(0, &grid);
        assert!(report.passed);
        for &t in &grid {
            let s = 1.0 - t;
            // two-term closed form f(1)/(f(0) + f(1)s)
            let closed = 1.0 / (1.0 + s);
            assert_abs_diff_eq!(eval.intensity(t, 0), closed, epsilon = 1e-12);
        }
        assert!(eval.verify_ratio_bound(&grid).passed);
    }

    #[test]
    fn lc_preserved_for_binomial_density() {
        let b = UlcMeasure::binomial(3, 0.5, 1.0).unwrap();
        for &t in &[0.1, 1.0, 5.0] {
            assert!(verify_lc_preserved(b.density(), t).unwrap().passed);
        }
        assert!(verify_lc_preserved(&LogConcaveFn::constant(5), 2.0).unwrap().passed);
    }

    #[test]
    fn fokker_planck_matches_closed_form() {
        let target = UlcMeasure::binomial(3, 0.5, 1.0).unwrap();
        let eval = SemigroupEvaluator::for_target(&target);
        let grid = uniform_grid(1.0, 20);
        let curve = fokker_planck_evolve(&eval, &grid).unwrap();
        assert_eq!(curve.rows[0][0], 1.0);
        assert!(curve.sup_error(&eval) < 1e-6);
        let last = curve.rows.last().unwrap();
        for (k, &m) in last.iter().enumerate().take(4) {
            assert_abs_diff_eq!(m, target.weight(k), epsilon = 1e-6);
        }
    }

    #[test]
    fn fokker_planck_poisson_flow() {
        let target = UlcMeasure::poisson(1.0).unwrap();
        let eval = SemigroupEvaluator::for_target(&target);
        let grid = uniform_grid(1.0, 10);
        let curve = fokker_planck_evolve(&eval, &grid).unwrap();
        for (&t, row) in grid.iter().zip(&curve.rows) {
            for (k, &m) in row.iter().enumerate().take(10) {
                assert_abs_diff_eq!(m, ln_poisson_pmf(t, k).exp(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn fokker_planck_aborts_on_huge_step() {
        let f = LogConcaveFn::new(vec![1.0, 40.0, 800.0, 8000.0, 40000.0]).unwrap();
        let eval = SemigroupEvaluator::new(&f, 4.0).unwrap();
        let res = eval.fokker_planck(&[0.0, 4.0], 10, 4.0);
        assert!(matches!(res, Err(Error::IntegrationDiverged { .. })), "{res:?}");
    }

    #[test]
    fn integrated_intensity_equals_log_constant() {
        let target = UlcMeasure::binomial(4, 0.35, 1.3).unwrap();
        let eval = SemigroupEvaluator::for_target(&target);
        let integral = eval.integrated_intensity(1000);
        assert_abs_diff_eq!(integral, target.log_constant(), epsilon = 1e-6);
        assert_abs_diff_eq!(target.log_constant(), 1.3 - target.density().get(0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn snapping_is_exact_at_endpoints() {
        let eval = bernoulli_eval();
        assert_eq!(eval.snap(1.0), (1_000_000_000, 1.0));
        assert_eq!(eval.snap(0.0), (0, 0.0));
    }
}
