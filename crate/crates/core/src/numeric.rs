//! Small numerical helpers shared across modules.

use std::sync::OnceLock;

const EXACT_FACTORIALS: usize = 21;

fn factorial_table() -> &'static [f64; EXACT_FACTORIALS] {
    static TABLE: OnceLock<[f64; EXACT_FACTORIALS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; EXACT_FACTORIALS];
        let mut acc = 1.0_f64;
        for (k, slot) in table.iter_mut().enumerate() {
            if k > 0 {
                acc *= k as f64;
            }
            *slot = acc.ln();
        }
        table
    })
}

/// `ln k!`. Exact products up to 20!, Stirling series beyond.
pub fn ln_factorial(k: usize) -> f64 {
    if k < EXACT_FACTORIALS {
        return factorial_table()[k];
    }
    let n = k as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + series
}

/// `ln Σ exp(xᵢ)`; `-∞` entries are skipped, an all-`-∞` input yields `-∞`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = NeumaierSum::default();
    for x in terms {
        acc.add((x - max).exp());
    }
    max + acc.total().ln()
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().total()
}

/// `h(x) = (1+x)·ln(1+x) − x` for `x ≥ −1`, the unit-scale Bregman remainder of
/// `u ln u`. Uses the alternating series near 0 where the closed form cancels.
pub fn bregman_xlogx_unit(x: f64) -> f64 {
    if x == -1.0 {
        return 1.0;
    }
    if x.abs() < 0.05 {
        // Σ_{n≥2} (−1)ⁿ xⁿ / (n(n−1))
        let mut term = x * x;
        let mut acc = 0.0;
        for n in 2..20u32 {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * term / (nf * (nf - 1.0));
            term *= x;
        }
        return acc;
    }
    (1.0 + x) * x.ln_1p() - x
}

/// Composite Simpson rule on `[a, b]` with `2·half_intervals` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, half_intervals: usize) -> f64 {
    let n = 2 * half_intervals.max(1);
    let h = (b - a) / n as f64;
    let mut acc = NeumaierSum::default();
    acc.add(f(a));
    acc.add(f(b));
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + i as f64 * h));
    }
    acc.total() * h / 3.0
}
