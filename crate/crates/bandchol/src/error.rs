use thiserror::Error;

/// Errors raised by the estimators and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("non-finite entries in input")]
    NonFinite,

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("singular Gram matrix in the regression for row {row} (window {window}, n = {n})")]
    SingularGram { row: usize, window: usize, n: usize },

    #[error("empty window")]
    EmptyWindow,

    #[error("column {0} has zero rank variance")]
    ConstantColumn(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
