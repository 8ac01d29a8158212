#![allow(dead_code)]

use ptm_core::ProbabilityVector;

/// `W₁` by the monotone (quantile) coupling: mass is matched greedily in
/// increasing order of position, paying `|i − j|` per unit.
pub fn w1_monotone_coupling(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (a.first().copied().unwrap_or(0.0), b.first().copied().unwrap_or(0.0));
    let mut cost = 0.0;
    loop {
        while ra <= 1e-15 && i + 1 < a.len() {
            i += 1;
            ra = a[i];
        }
        while rb <= 1e-15 && j + 1 < b.len() {
            j += 1;
            rb = b[j];
        }
        if ra <= 1e-15 || rb <= 1e-15 {
            return cost;
        }
        let m = ra.min(rb);
        cost += m * (i as f64 - j as f64).abs();
        ra -= m;
        rb -= m;
    }
}

/// `W₁` by Kantorovich duality: the extreme 1-Lipschitz functions on a path
/// have increments `±1`, so the supremum is a maximum over `2^{L−1}` sign patterns.
pub fn w1_dual_enumeration(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let diff: Vec<f64> = (0..len).map(|k| a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << (len - 1)) {
        let mut phi = 0.0;
        let mut total = diff[0] * phi;
        for (k, d) in diff.iter().enumerate().skip(1) {
            phi += if mask >> (k - 1) & 1 == 1 { 1.0 } else { -1.0 };
            total += d * phi;
        }
        best = best.max(total);
    }
    best
}

pub fn pv(w: &[f64]) -> ProbabilityVector {
    ProbabilityVector::from_unnormalized(w.to_vec()).unwrap()
}
