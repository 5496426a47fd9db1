use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad ids, zero counts, epsilon outside (0,1)).
    #[error("invalid input: {0}")]
    Input(String),
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Unusable configuration, e.g. a disconnected topology.
    #[error("configuration error: {0}")]
    Config(String),
    /// Aggregation could not be produced from the supplied rows.
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
