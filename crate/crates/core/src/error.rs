use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a finite group, got {0}")]
    UnsupportedForContinuousGroup(String),

    #[error("operation requires a continuous group, got {0}")]
    UnsupportedForFiniteGroup(String),

    #[error("unsupported kernel configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed on {n}x{n} matrix (max |entry| = {max_abs:.3e}, non-finite entries = {non_finite})")]
    Eigen {
        n: usize,
        max_abs: f64,
        non_finite: usize,
    },

    #[error("covariance matrix is singular after {attempts} jitter attempts (last jitter {jitter:.3e}, condition estimate {condition:.3e})")]
    SingularSystem {
        attempts: usize,
        jitter: f64,
        condition: f64,
    },

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
