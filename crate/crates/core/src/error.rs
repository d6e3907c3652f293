use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. `key` names the offending field.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("injection failed: {0}")]
    Injection(String),

    #[error("stage index {index} out of range for {stages}-stage amplifier")]
    StageIndex { index: usize, stages: usize },

    #[error("invalid fault: {0}")]
    Fault(String),

    #[error("cannot split {len} samples into {windows} equal windows")]
    Window { len: usize, windows: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("cluster statistics: {0}")]
    Stats(String),

    #[error("degenerate centroid selection: {0}")]
    Degenerate(String),

    #[error("unsupported model file version {0}")]
    ModelVersion(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration key associated with this error, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::Config { key, .. } => Some(key),
            _ => None,
        }
    }
}
