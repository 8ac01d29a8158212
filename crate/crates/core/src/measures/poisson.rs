use crate::error::{Error, Result};
use crate::numeric::ln_factorial;

/// `ln π_λ(k)` for `λ ≥ 0`; `π_0 = δ₀`.
pub fn ln_poisson_pmf(lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + k as f64 * lambda.ln() - ln_factorial(k)
}

/// `π_λ(k) = e^{−λ} λᵏ / k!`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, k: usize) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    Ok(ln_poisson_pmf(lambda, k).exp())
}

/// Smallest `N` with `Σ_{k>N} π_λ(k) ≤ tail_tol`.
pub fn poisson_truncation_point(lambda: f64, tail_tol: f64) -> Result<usize> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    // Beyond `far` the tail is far below any tolerance we accept.
    let far = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize;
    let mut tail = 0.0;
    for k in (0..=far).rev() {
        let next = tail + ln_poisson_pmf(lambda, k).exp();
        if next > tail_tol {
            return Ok(k);
        }
        tail = next;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_at_zero_is_exp_minus_lambda() {
        assert!((poisson_pmf(1.0, 0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn pmf_matches_exact_small_case() {
        // e^{-2}·2³/3! to 16 digits
        let expected = 0.180_447_044_315_483_6;
        assert!((poisson_pmf(2.0, 3).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn pmf_normalizes() {
        for &lambda in &[0.1, 1.0, 7.5, 40.0] {
            let s: f64 = (0..400).map(|k| poisson_pmf(lambda, k).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "lambda={lambda} sum={s}");
        }
    }

    #[test]
    fn pmf_survives_large_k() {
        let p = poisson_pmf(150.0, 200).unwrap();
        assert!(p.is_finite() && p > 0.0);
        assert_eq!(poisson_pmf(1.0, 1000).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(poisson_pmf(0.0, 1).is_err());
        assert!(poisson_pmf(-1.0, 1).is_err());
        assert!(poisson_pmf(f64::NAN, 1).is_err());
        assert!(poisson_pmf(f64::INFINITY, 1).is_err());
    }

    #[test]
    fn truncation_point_drops_tiny_tail() {
        let n = poisson_truncation_point(1.0, 1e-14).unwrap();
        let tail: f64 = (n + 1..200).map(|k| poisson_pmf(1.0, k).unwrap()).sum();
        let tail_prev: f64 = (n..200).map(|k| poisson_pmf(1.0, k).unwrap()).sum();
        assert!(tail <= 1e-14);
        assert!(tail_prev > 1e-14);
    }
}
