use thiserror::Error;

use crate::models::LogisticModel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The likelihood has no finite maximiser. `last` is the iterate at which
    /// the optimiser stopped, which still defines a (near) separating rule.
    #[error("perfect separation detected after {iterations} iterations")]
    Separation {
        last: Box<LogisticModel>,
        iterations: usize,
    },

    #[error("matrix is numerically singular: {0}")]
    Rank(String),

    #[error("parameter is not identifiable: {0}")]
    Identifiability(String),

    #[error("degenerate likelihood: {0}")]
    Degenerate(String),

    #[error("too many failures in {what}: {failed} of {attempted}")]
    TooManyFailures {
        what: String,
        failed: usize,
        attempted: usize,
    },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
