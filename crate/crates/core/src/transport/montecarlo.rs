//! Monte Carlo diagnostics: sampling, marginal laws, and the martingale mean.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Atom, PointConfiguration, TransportMap, TransportPath};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::rng;

/// Poisson point process of unit intensity on `[0,T]×[0,M]`.
pub fn sample_configuration<R: Rng + ?Sized>(horizon: f64, height: f64, rng: &mut R) -> PointConfiguration {
    let mass = horizon * height;
    if !(mass > 0.0) {
        return PointConfiguration::empty();
    }
    let count = Poisson::new(mass).expect("positive finite mass").sample(rng) as usize;
    let atoms = (0..count).map(|_| Atom::new(rng.random::<f64>() * horizon, rng.random::<f64>() * height)).collect();
    PointConfiguration::from_atoms(atoms).0
}

/// Drives `n` fresh configurations (replication `i` on substream `i`) and maps
/// each path through `f`, preserving replication order.
pub fn simulate_paths<R, F>(map: &TransportMap, n: usize, seed: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&TransportPath) -> R + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::substream(seed, rep);
            let config = sample_configuration(map.horizon(), map.height(), &mut rng);
            let path = map.drive(&config).expect("sampled atoms lie in the rectangle");
            f(&path)
        })
        .collect()
}

/// `n` independent draws of `X_T`.
pub fn transport_sample(map: &TransportMap, n: usize, seed: u64) -> Vec<usize> {
    simulate_paths(map, n, seed, TransportPath::final_value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub t: f64,
    pub n: usize,
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
    pub tv: f64,
    pub budget: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub passed: bool,
}

fn marginal_report(map: &TransportMap, t: f64, samples: &[usize], budget: Option<f64>) -> MarginalReport {
    let n = samples.len();
    let top = map.target().support_top();
    let cells = top.max(samples.iter().copied().max().unwrap_or(0)) + 1;
    let mut counts = vec![0usize; cells];
    for &x in samples {
        counts[x] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let exact = map.evaluator().closed_form_marginal(t, cells - 1);
    let tv = 0.5 * compensated_sum(empirical.iter().zip(&exact).map(|(a, b)| (a - b).abs()));
    let mut chi_square = 0.0;
    let mut used = 0usize;
    for (&c, &p) in counts.iter().zip(&exact) {
        if p > 0.0 {
            let expected = p * n as f64;
            chi_square += (c as f64 - expected).powi(2) / expected;
            used += 1;
        }
    }
    let budget = budget.unwrap_or_else(|| 3.0 * ((top + 1) as f64 / n as f64).sqrt());
    MarginalReport { t, n, empirical, exact, tv, budget, chi_square, dof: used.saturating_sub(1), passed: tv <= budget }
}

/// Empirical law of `X_t` against `(P_{T−t}f)π_t`. The default TV budget is
/// `3·√(K/n)` with `K` the support size.
pub fn marginal_test(map: &TransportMap, t: f64, n: usize, seed: u64, budget: Option<f64>) -> Result<MarginalReport> {
    Ok(marginal_tests(map, &[t], n, seed, budget)?.remove(0))
}

/// Several marginal tests sharing the same `n` drives.
pub fn marginal_tests(
    map: &TransportMap,
    times: &[f64],
    n: usize,
    seed: u64,
    budget: Option<f64>,
) -> Result<Vec<MarginalReport>> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", value: 0.0 });
    }
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=map.horizon()).contains(&t)) {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    let draws = simulate_paths(map, n, seed, |path| times.iter().map(|&t| path.x_at(t)).collect::<Vec<_>>());
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let samples: Vec<usize> = draws.iter().map(|d| d[i]).collect();
            marginal_report(map, t, &samples, budget)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub n: usize,
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `P_T f(1)`, the common mean of `λ_t`.
    pub expected: f64,
    pub within_band: Vec<bool>,
    pub flat: bool,
    pub mean_final: f64,
    pub mean_final_std_error: f64,
    /// `T·P_T f(1) = E[μ]`.
    pub expected_final: f64,
    pub final_within_band: bool,
    pub passed: bool,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = compensated_sum(values.clone()) / n as f64;
    let var = compensated_sum(values.map(|v| (v - mean) * (v - mean))) / (n.max(2) - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Monte Carlo estimates of `E[λ_t]` on `grid`, judged at 4σ.
pub fn martingale_stats(map: &TransportMap, n: usize, grid: &[f64], seed: u64) -> Result<MartingaleReport> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", value: n as f64 });
    }
    if let Some(&t) = grid.iter().find(|&&t| !(0.0..=map.horizon()).contains(&t)) {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    let draws = simulate_paths(map, n, seed, |path| {
        let lambdas: Vec<f64> = grid.iter().map(|&t| path.lambda_at(map, t)).collect();
        (lambdas, path.final_value() as f64)
    });
    let expected = map.evaluator().ln_apply(map.horizon(), 1).exp();
    const SIGMAS: f64 = 4.0;
    const FLOOR: f64 = 1e-12;

    let mut means = Vec::with_capacity(grid.len());
    let mut std_errors = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (m, se) = mean_and_se(draws.iter().map(|d| d.0[i]), n);
        means.push(m);
        std_errors.push(se);
    }
    let within_band: Vec<bool> =
        means.iter().zip(&std_errors).map(|(m, se)| (m - expected).abs() <= SIGMAS * se + FLOOR).collect();
    let mut flat = true;
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            let band = SIGMAS * (std_errors[i].powi(2) + std_errors[j].powi(2)).sqrt() + FLOOR;
            flat &= (means[i] - means[j]).abs() <= band;
        }
    }
    let (mean_final, mean_final_std_error) = mean_and_se(draws.iter().map(|d| d.1), n);
    let expected_final = map.horizon() * expected;
    let final_within_band = (mean_final - expected_final).abs() <= SIGMAS * mean_final_std_error + FLOOR;
    let passed = flat && final_within_band && within_band.iter().all(|&b| b);
    Ok(MartingaleReport {
        n,
        grid: grid.to_vec(),
        means,
        std_errors,
        expected,
        within_band,
        flat,
        mean_final,
        mean_final_std_error,
        expected_final,
        final_within_band,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{LogConcaveFn, UlcMeasure};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_height_gives_empty_configurations() {
        let mut r = rng::master(1);
        for _ in 0..100 {
            assert!(sample_configuration(1.0, 0.0, &mut r).is_empty());
        }
    }

    #[test]
    fn count_mean_and_variance_match_poisson() {
        let n = 100_000;
        let counts: Vec<f64> =
            (0..n as u64).map(|i| sample_configuration(1.0, 1.0, &mut rng::substream(3, i)).len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (1.0 / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se_mean, "mean={mean}");
        // Var of the sample variance for Poisson(1): (μ₄ − σ⁴)/n with μ₄ = 1 + 3.
        let se_var = (3.0 / n as f64).sqrt();
        assert!((var - 1.0).abs() <= 3.0 * se_var, "var={var}");
    }

    #[test]
    fn configurations_lie_in_rectangle_and_are_sorted() {
        let mut r = rng::master(9);
        for _ in 0..200 {
            let c = sample_configuration(2.5, 1.5, &mut r);
            for w in c.atoms().windows(2) {
                assert!(w[1].t > w[0].t);
            }
            assert!(c.atoms().iter().all(|a| (0.0..=2.5).contains(&a.t) && (0.0..=1.5).contains(&a.z)));
        }
    }

    #[test]
    fn dirac_target_samples_zero() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.0, 1.0).unwrap());
        assert!(transport_sample(&map, 1000, 1).iter().all(|&x| x == 0));
    }

    #[test]
    fn poisson_target_mean() {
        let map = TransportMap::new(UlcMeasure::poisson(1.0).unwrap());
        let n = 100_000;
        let xs = transport_sample(&map, n, 21);
        let mean = xs.iter().sum::<usize>() as f64 / n as f64;
        assert!((mean - 1.0).abs() <= 3.0 * (1.0 / n as f64).sqrt(), "mean={mean}");
    }

    #[test]
    fn binomial_marginals() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let reports = marginal_tests(&map, &[0.0, 1.0], 100_000, 4, Some(0.01)).unwrap();
        assert_eq!(reports[0].empirical[0], 1.0);
        assert!(reports[0].tv < 1e-15);
        assert!(reports[1].passed, "tv={}", reports[1].tv);
        assert!(reports[1].chi_square.is_finite());
    }

    #[test]
    fn poisson_flow_marginal_at_half() {
        let map = TransportMap::new(UlcMeasure::from_density(&LogConcaveFn::constant(40), 1.0).unwrap());
        let r = marginal_test(&map, 0.5, 100_000, 8, Some(0.01)).unwrap();
        assert!(r.passed, "tv={}", r.tv);
        assert_abs_diff_eq!(r.exact[1], 0.5 * (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn martingale_constant_density_is_exact() {
        let map = TransportMap::new(UlcMeasure::from_density(&LogConcaveFn::constant(60), 1.0).unwrap());
        let r = martingale_stats(&map, 10_000, &[0.0, 0.25, 0.5, 0.75, 1.0], 2).unwrap();
        for (&m, &se) in r.means.iter().zip(&r.std_errors) {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
            assert!(se < 1e-12);
        }
        assert!(r.passed);
    }

    #[test]
    fn martingale_bernoulli_mean_is_half() {
        let map = TransportMap::new(UlcMeasure::bernoulli(0.5, 1.0).unwrap());
        let r = martingale_stats(&map, 20_000, &[0.0, 0.5, 0.9], 6).unwrap();
        assert_abs_diff_eq!(r.expected, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.means[0], 0.5, epsilon = 1e-14);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let map = TransportMap::new(UlcMeasure::binomial(4, 0.4, 2.0).unwrap());
        assert_eq!(transport_sample(&map, 500, 77), transport_sample(&map, 500, 77));
    }
}
