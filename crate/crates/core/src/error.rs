use thiserror::Error;

/// Errors surfaced by the library. The variants map onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("capability limit: {0}")]
    Capability(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("internal contradiction: {0}")]
    Internal(String),
    #[error("lp solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
