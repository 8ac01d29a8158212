use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("empty sequence")]
    Empty,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("support is not an integer interval starting at 0 (gap at k={index})")]
    NonContiguousSupport { index: usize },

    #[error("density value must be positive, got {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("not log-concave: first violation at k={index}")]
    NotLogConcave { index: usize },

    #[error("not ultra-log-concave: first violation at k={index}")]
    NotUltraLogConcave { index: usize },

    #[error("zero total mass")]
    ZeroMass,

    #[error("support violation: ν({index}) > 0 but μ({index}) = 0")]
    SupportViolation { index: usize },

    #[error("value {value} at k={index} outside the domain of Φ")]
    DomainViolation { index: usize, value: f64 },

    #[error("atom ({t}, {z}) outside the rectangle [0,{horizon}]×[0,{height}]")]
    AtomOutOfRange { t: f64, z: f64, horizon: f64, height: f64 },

    #[error("atoms not strictly increasing in time at position {index}")]
    UnsortedAtoms { index: usize },

    #[error("state k={k} beyond the support top {top}")]
    BeyondSupport { k: usize, top: usize },

    #[error("Fokker-Planck row at t={t} sums to {sum}")]
    IntegrationDiverged { t: f64, sum: f64 },

    #[error("length mismatch: expected at least {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
