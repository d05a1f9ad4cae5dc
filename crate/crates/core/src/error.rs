use thiserror::Error;

/// Errors raised by the quantization library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("norm is not differentiable at the origin")]
    NotDifferentiable,

    #[error("degenerate point: coordinate {index} is zero on a positive-weight index")]
    DegeneratePoint { index: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("no split point found after {0} draws")]
    NoSplit(usize),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QuantError>;

impl From<std::io::Error> for QuantError {
    fn from(e: std::io::Error) -> Self {
        QuantError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QuantError {
    fn from(e: serde_json::Error) -> Self {
        QuantError::Parse(e.to_string())
    }
}

impl From<csv::Error> for QuantError {
    fn from(e: csv::Error) -> Self {
        QuantError::Parse(e.to_string())
    }
}
