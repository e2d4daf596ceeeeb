use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad flags or configuration; the CLI exits with status 2.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] mpomps::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}
