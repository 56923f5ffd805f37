use thiserror::Error;

use crate::quadric::QuadricKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported sampling strategy: {0}")]
    UnsupportedStrategy(String),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    /// The point lies in the zero set of the field, where the S-invariant is undefined.
    #[error("point lies in the zero set of the field (|w| = {value:e} <= floor {floor:e})")]
    ZeroSet { value: f64, floor: f64 },

    #[error("field must be positive, got w = {0}")]
    NonPositive(f64),

    #[error("not enough admissible samples: {found} < {required}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("no real solution: C^2 + c^2 - 1 = {0:e} < 0")]
    NoSolution(f64),

    /// Constant fields with w^2 = c^2 - 1 (C = 0) are excluded from the classification.
    #[error("excluded branch: constant field with w^2 = c^2 - 1 has no quadric")]
    ExcludedBranch,

    #[error("unrepresentable quadric: {0}")]
    Unrepresentable(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no geometric elements for {0:?}")]
    NoElements(QuadricKind),

    #[error("rejection sampling acceptance rate {rate:e} below {min:e}")]
    Sampling { rate: f64, min: f64 },
}
