use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid parameter `{key}`: {reason}")]
    Parameter { key: String, reason: String },
    #[error("replica {replica} failed: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: kpzlab_core::Error,
    },
    #[error("replica {replica} panicked: {message}")]
    WorkerPanic { replica: u64, message: String },
    #[error(transparent)]
    Core(#[from] kpzlab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        CliError::Parameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
