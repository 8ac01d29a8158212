//! Poisson transport map onto ultra-log-concave (ULC) measures on ℕ.
//!
//! A planar Poisson point process on `[0,T]×[0,M]` is thinned by a predictable
//! intensity curve `λ_t = P_{T-t}f(X_t+1) / P_{T-t}f(X_t)`; the resulting
//! counting process ends at `X_T ~ μ = f·π_T`. For ULC targets the map
//! `ω ↦ X_T(ω)` has add-one-cost derivative in `{0, 1}`, which this crate
//! checks by deterministic replay, alongside the functional inequalities that
//! follow from it.
//!
//! Layout:
//!
//! * [`measures`]: probability vectors, log-concave densities, ULC measures,
//!   entropies, `W₁`, and the scalar functions `Ψ` and `α_c`.
//! * [`semigroup`]: the Poisson semigroup `P_t`, the potential `F(t,k)` and its
//!   discrete derivative, and the discrete Fokker–Planck flow.
//! * [`transport`]: point configurations, the driven path, Malliavin replay
//!   and Monte Carlo diagnostics.
//! * [`inequalities`]: constant chain, modified log-Sobolev, Φ-Sobolev,
//!   Poincaré and transport-entropy verifiers plus random instance families.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inequalities;
pub mod measures;
pub mod numeric;
pub mod report;
pub mod rng;
pub mod semigroup;
pub mod transport;

pub use error::{Error, Result};
pub use inequalities::{ConstantChain, PhiSpec};
pub use measures::{LogConcaveFn, ProbabilityVector, UlcMeasure};
pub use report::{CheckReport, InequalityReport};
pub use semigroup::{MarginalCurve, SemigroupEvaluator};
pub use transport::{Atom, PointConfiguration, TransportMap, TransportPath};

/// Library version embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
