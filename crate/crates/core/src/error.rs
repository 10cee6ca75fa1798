use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("QoI evaluation failed: {0}")]
    Evaluation(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("unknown name: {0}")]
    Lookup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
