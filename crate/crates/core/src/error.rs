use thiserror::Error;

/// Errors produced by the runs-statistic library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data failed validation.
    #[error("data error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Data { row: Option<usize>, message: String },

    /// An iterative numerical routine did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested computation is outside what this method supports.
    #[error("capability error: {0}")]
    Capability(String),

    /// A Monte Carlo sample set has no usable values.
    #[error("empty sample set: {0}")]
    EmptySample(String),

    /// Too few samples in the tail to estimate the requested quantity.
    #[error("insufficient tail mass: {0}")]
    InsufficientTail(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(row: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Data {
            row,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
