//! Convex functions `Φ` supplied as evaluations of `Φ` and `Φ′`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Closed interval, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const NONNEGATIVE: Interval = Interval { lo: 0.0, hi: f64::INFINITY };

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

pub trait ConvexFunction: Send + Sync {
    fn name(&self) -> &str;
    fn domain(&self) -> Interval;
    fn value(&self, u: f64) -> f64;
    fn derivative(&self, u: f64) -> f64;

    /// `Ψ(u,v) = Φ(u+v) − Φ(u) − Φ′(u)·v`.
    fn bregman(&self, u: f64, v: f64) -> f64 {
        self.value(u + v) - self.value(u) - self.derivative(u) * v
    }
}

/// `Φ(u) = u ln u` on `[0, ∞)` with `0 ln 0 = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct XLogX;

impl ConvexFunction for XLogX {
    fn name(&self) -> &str {
        "u log u"
    }

    fn domain(&self) -> Interval {
        Interval::NONNEGATIVE
    }

    fn value(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u * u.ln()
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        u.ln() + 1.0
    }

    fn bregman(&self, u: f64, v: f64) -> f64 {
        super::psi_mlsi(u, v).unwrap_or(f64::NAN)
    }
}

/// `Φ(u) = u²`, for which `Ψ(u,v) = v²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl ConvexFunction for Square {
    fn name(&self) -> &str {
        "u^2"
    }

    fn domain(&self) -> Interval {
        Interval::REAL_LINE
    }

    fn value(&self, u: f64) -> f64 {
        u * u
    }

    fn derivative(&self, u: f64) -> f64 {
        2.0 * u
    }

    fn bregman(&self, _u: f64, v: f64) -> f64 {
        v * v
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied `Φ` from closures; `Ψ` falls back to the Bregman form.
#[derive(Clone)]
pub struct FnPhi {
    name: String,
    domain: Interval,
    value: ScalarFn,
    derivative: ScalarFn,
}

impl FnPhi {
    pub fn new(
        name: impl Into<String>,
        domain: Interval,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnPhi { name: name.into(), domain, value: Arc::new(value), derivative: Arc::new(derivative) }
    }
}

impl fmt::Debug for FnPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPhi").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl ConvexFunction for FnPhi {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> Interval {
        self.domain
    }

    fn value(&self, u: f64) -> f64 {
        (self.value)(u)
    }

    fn derivative(&self, u: f64) -> f64 {
        (self.derivative)(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_psi_matches_bregman_form_on_grid() {
        let generic = FnPhi::new("xlogx", Interval::NONNEGATIVE, |u| u * u.ln(), |u| u.ln() + 1.0);
        for i in 1..=40 {
            let u = 0.05 * i as f64;
            for j in 0..=40 {
                let v = -u + 0.01 + j as f64 * 0.1;
                let a = XLogX.bregman(u, v);
                let b = generic.bregman(u, v);
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "u={u} v={v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn square_remainder_is_v_squared() {
        let generic = FnPhi::new("sq", Interval::REAL_LINE, |u| u * u, |u| 2.0 * u);
        for &(u, v) in &[(0.0, 1.0), (-2.0, 3.5), (1.5, -0.25)] {
            assert!((Square.bregman(u, v) - generic.bregman(u, v)).abs() < 1e-12);
        }
    }
}
