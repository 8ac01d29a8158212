//! Entropies, `W₁`, and the scalar functions `Ψ` and `α_c`.

use super::phi::ConvexFunction;
use super::ProbabilityVector;
use crate::error::{Error, Result};
use crate::numeric::{bregman_xlogx_unit, compensated_sum};

/// `Ent^Φ_μ(g) = Σ Φ(g(k))μ(k) − Φ(Σ g(k)μ(k))`.
///
/// Only points with `μ(k) > 0` are read, so `g` may be shorter than the
/// stored range as long as it covers the support.
pub fn phi_entropy(mu: &ProbabilityVector, g: &[f64], phi: &dyn ConvexFunction) -> Result<f64> {
    let top = mu.support_top();
    if g.len() <= top {
        return Err(Error::LengthMismatch { expected: top + 1, got: g.len() });
    }
    let domain = phi.domain();
    let mut mean = Vec::with_capacity(top + 1);
    let mut avg_phi = Vec::with_capacity(top + 1);
    for (k, (&w, &x)) in mu.weights().iter().zip(g).enumerate() {
        if w == 0.0 {
            continue;
        }
        if !domain.contains(x) {
            return Err(Error::DomainViolation { index: k, value: x });
        }
        mean.push(w * x);
        avg_phi.push(w * phi.value(x));
    }
    let mean = compensated_sum(mean);
    if !domain.contains(mean) {
        return Err(Error::DomainViolation { index: usize::MAX, value: mean });
    }
    Ok(compensated_sum(avg_phi) - phi.value(mean))
}

/// `H(ν|μ) = Σ ν(k) ln(ν(k)/μ(k))` with `0 ln 0 = 0`.
pub fn relative_entropy(nu: &ProbabilityVector, mu: &ProbabilityVector) -> Result<f64> {
    let mut terms = Vec::with_capacity(nu.len());
    for (k, &p) in nu.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let q = mu.weight(k);
        if q == 0.0 {
            return Err(Error::SupportViolation { index: k });
        }
        terms.push(p * (p / q).ln());
    }
    Ok(compensated_sum(terms))
}

/// `W₁(ν, μ) = Σ_k |F_ν(k) − F_μ(k)|` for the cost `|x − y|` on ℕ.
pub fn wasserstein1(nu: &ProbabilityVector, mu: &ProbabilityVector) -> f64 {
    let len = nu.len().max(mu.len());
    let mut f_nu = 0.0;
    let mut f_mu = 0.0;
    let mut acc = Vec::with_capacity(len);
    for k in 0..len.saturating_sub(1) {
        f_nu += nu.weight(k);
        f_mu += mu.weight(k);
        acc.push((f_nu - f_mu).abs());
    }
    compensated_sum(acc)
}

/// `α_c(r) = c[(1 + r/c)ln(1 + r/c) − r/c]`.
pub fn alpha_c(c: f64, r: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter { name: "c", value: c });
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidParameter { name: "r", value: r });
    }
    Ok(c * bregman_xlogx_unit(r / c))
}

/// `Ψ(u,v) = (u+v)ln(u+v) − u ln u − (ln u + 1)v`, evaluated as `u·h(v/u)`.
pub fn psi_mlsi(u: f64, v: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::InvalidParameter { name: "u", value: u });
    }
    if !(v.is_finite() && u + v >= 0.0) {
        return Err(Error::InvalidParameter { name: "v", value: v });
    }
    Ok(u * bregman_xlogx_unit((v / u).max(-1.0)))
}

/// Discrete convolution of two probability vectors.
pub fn convolve(a: &ProbabilityVector, b: &ProbabilityVector) -> ProbabilityVector {
    let n = a.len() + b.len() - 1;
    let mut out = vec![0.0; n];
    for (i, &x) in a.weights().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.weights().iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    ProbabilityVector::from_unnormalized(out).expect("convolution of probability vectors has unit mass")
}
