use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FgpsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure at index {index}: {reason}")]
    NumericalFailure { index: usize, reason: String },

    #[error("adaptive quadrature did not converge within {panels} panels (last estimate {estimate:e})")]
    OracleNonConvergence { estimate: f64, panels: usize },

    #[error("inconsistent initial data: g(0) = {g0:e} but h(0) = {h0:e}")]
    InconsistentInitialData { g0: f64, h0: f64 },

    #[error("singular system: pivot {pivot} vanishes to working precision")]
    SingularSystem { pivot: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FgpsError {
    fn from(err: std::io::Error) -> Self {
        FgpsError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FgpsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FgpsError {
    FgpsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
