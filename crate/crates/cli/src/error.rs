use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] uplink_aoi::Error),
    #[error("{0}")]
    Config(String),
    #[error("reports do not share parameters:\n{0}")]
    Mismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: malformed report: {detail}")]
    Report { path: PathBuf, detail: String },
    #[error("fixed point did not converge; partial results were written")]
    NotConverged,
    #[error("reports disagree beyond the configured tolerances")]
    Disagree,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use uplink_aoi::Error as E;
        match self {
            CliError::Config(_) | CliError::Mismatch(_) => 3,
            CliError::Core(E::Parameter(_) | E::Unsupported(_)) => 3,
            CliError::NotConverged => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}
