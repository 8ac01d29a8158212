//! Random instance families for the sweeps.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::measures::{LogConcaveFn, ProbabilityVector, UlcMeasure};

/// Random ULC target: support `{0..N}` with `N ∈ {1..max_support}`,
/// `T ∈ [0.2, 5]`, and `ln f` concave with `V(0) = 0` and sorted,
/// negated `Exp(1)` increments.
pub fn random_ulc<R: Rng + ?Sized>(rng: &mut R, max_support: usize) -> UlcMeasure {
    let max_support = max_support.max(1);
    let n = rng.random_range(1..=max_support);
    let horizon = rng.random_range(0.2..=5.0);
    let mut increments: Vec<f64> = (0..n).map(|_| -Distribution::<f64>::sample(&Exp1, rng)).collect();
    increments.sort_by(|a: &f64, b| b.total_cmp(a));
    let logs = cumulative(&increments);
    let f = LogConcaveFn::from_log_values(&logs).expect("concave by construction");
    UlcMeasure::from_density(&f, horizon).expect("valid density and horizon")
}

/// Random log-concave `f` on `{0..N}` with `N ∈ {0..max_support}`: log-increments
/// drawn from `U[−3, 3]` and sorted in decreasing order.
pub fn random_log_concave<R: Rng + ?Sized>(rng: &mut R, max_support: usize) -> LogConcaveFn {
    let n = rng.random_range(0..=max_support);
    let mut increments: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
    increments.sort_by(|a, b| b.total_cmp(a));
    let start = rng.random_range(-2.0..=2.0);
    let logs: Vec<f64> = cumulative(&increments).into_iter().map(|v| v + start).collect();
    LogConcaveFn::from_log_values(&logs).expect("concave by construction")
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut logs = Vec::with_capacity(increments.len() + 1);
    let mut v = 0.0;
    logs.push(v);
    for d in increments {
        v += d;
        logs.push(v);
    }
    logs
}

/// Test function on `{0..N+1}`: `ln g ~ U[−2, 2]` when `positive`, otherwise
/// `g ~ U[−3, 3]`.
pub fn random_g<R: Rng + ?Sized>(rng: &mut R, target: &UlcMeasure, positive: bool) -> Vec<f64> {
    (0..target.support_top() + 2)
        .map(|_| if positive { rng.random_range(-2.0..=2.0f64).exp() } else { rng.random_range(-3.0..=3.0) })
        .collect()
}

/// `ν ≪ μ` with `Exp(1)` weights on the support, each zeroed with probability 0.3.
pub fn random_nu<R: Rng + ?Sized>(rng: &mut R, target: &UlcMeasure) -> ProbabilityVector {
    let len = target.support_top() + 1;
    loop {
        let weights: Vec<f64> = (0..len)
            .map(|k| {
                let w: f64 = Exp1.sample(rng);
                if rng.random_bool(0.3) || target.weight(k) == 0.0 {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        if weights.iter().any(|&w| w > 0.0) {
            return ProbabilityVector::from_unnormalized(weights).expect("positive mass");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{check_log_concave, check_ulc};
    use crate::rng;

    #[test]
    fn random_ulc_is_ulc_and_deterministic() {
        for i in 0..2000 {
            let mu = random_ulc(&mut rng::substream(5, i), 10);
            assert!(check_ulc(mu.pv()).passed, "draw {i}");
            assert!(check_log_concave(mu.density().values()).unwrap().passed);
            assert!((1..=10).contains(&mu.support_top()));
            assert!((0.2..=5.0).contains(&mu.horizon()));
        }
        assert_eq!(random_ulc(&mut rng::master(3), 6), random_ulc(&mut rng::master(3), 6));
    }

    #[test]
    fn random_g_shape() {
        let mu = random_ulc(&mut rng::master(1), 8);
        let mut r = rng::master(2);
        let g = random_g(&mut r, &mu, true);
        assert_eq!(g.len(), mu.support_top() + 2);
        assert!(g.iter().all(|&x| x > 0.0));
        let h = random_g(&mut r, &mu, false);
        assert!(h.iter().all(|x| (-3.0..=3.0).contains(x)));
        assert_eq!(random_g(&mut rng::master(9), &mu, true), random_g(&mut rng::master(9), &mu, true));
    }

    #[test]
    fn random_nu_is_absolutely_continuous() {
        let mut r = rng::master(4);
        for _ in 0..500 {
            let mu = random_ulc(&mut r, 6);
            let nu = random_nu(&mut r, &mu);
            assert!(nu.support_top() <= mu.support_top());
            assert!((nu.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_log_concave_passes_check() {
        let mut r = rng::master(8);
        for _ in 0..500 {
            let f = random_log_concave(&mut r, 12);
            assert!(check_log_concave(f.values()).unwrap().passed);
        }
    }
}
