use thiserror::Error;

/// Library error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain (bad sigma, tau, delta, u, alpha, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested operation is not defined for the given loss or distribution kind.
    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    /// The input data cannot be used (empty, non-finite, degenerate, wrong shape).
    #[error("bad data: {0}")]
    BadData(String),

    /// A solver failed in a way that cannot be reported through `converged = false`.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// Dataset lookup or file parsing problem.
    #[error("dataset error: {0}")]
    Dataset(String),

    // the sources are not interpolated into the messages: callers that walk
    // the error chain would otherwise see the same text twice
    #[error("io error")]
    Io(#[from] std::io::Error),

    #[error("csv error")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::BadData(msg.into())
    }
}
