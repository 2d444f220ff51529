use thiserror::Error;

/// Errors raised by the linear algebra, target, direction and kernel layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("operation is only supported for dimension 2, got {0}")]
    UnsupportedDimension(usize),

    #[error("direction weights must be non-negative and sum to one")]
    InvalidWeights,

    #[error("point lies outside the support of the target")]
    OutOfSupport,

    #[error("current point violates the support constraints; no feasible interval")]
    EmptyInterval,

    #[error("truncation interval ({lo}, {hi}) carries no usable probability mass")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("non-positive curvature e'He = {0:e} along the proposal direction")]
    NonPositiveCurvature(f64),

    #[error("target does not provide {0}")]
    MissingDerivative(&'static str),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("series too short: {len} < {min}")]
    TooShort { len: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
