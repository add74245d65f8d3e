use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid order interval [{alpha}, {beta}]: need 0 < alpha < beta")]
    InvalidInterval { alpha: f64, beta: f64 },

    #[error("tangent vectors span a degenerate plane")]
    DegeneratePlane,

    #[error("spectral gap condition violated (delta = {0:e})")]
    GapViolation(f64),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("search direction vanishes")]
    ZeroDirection,

    #[error("invalid step rule: {0}")]
    InvalidStepRule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors caused by floating-point or matrix-domain failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSpd(_) | Error::NumericalDomain(_) | Error::GapViolation(_)
        )
    }
}
