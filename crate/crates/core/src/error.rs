use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Variants are split into input problems (bad parameters, malformed
/// patterns) and numerical failures, which the CLI maps onto distinct exit
/// codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window too small for requested range: {0}")]
    WindowTooSmall(String),

    #[error("window too small for subsampling: {0}")]
    TooFewBlocks(String),

    #[error("singular matrix ({context}); condition number {condition:e}")]
    Singular { context: &'static str, condition: f64 },

    #[error("non-elliptical contour: {0}")]
    NonElliptical(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the input (as opposed to a numerical
    /// breakdown while computing on valid input).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Singular { .. } | Error::NonElliptical(_) | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
