use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Programming errors (violated call contracts) panic
/// instead; `Error` covers everything a caller can plausibly recover from or
/// report to a user.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. `key` matches the config-file key.
    #[error("invalid parameter `{key}`: {msg}")]
    InvalidParam { key: &'static str, msg: String },

    /// A config file could not be parsed; points at the offending line.
    #[error("{path}:{line}: {msg}")]
    Config {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A config file problem not tied to a single line.
    #[error("{path}: {msg}")]
    ConfigFile { path: PathBuf, msg: String },

    /// A results.csv file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Results {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Some sweep runs failed; the manifest records which.
    #[error("{failed} of {total} sweep runs failed, see {manifest}")]
    SweepFailed {
        failed: usize,
        total: usize,
        manifest: PathBuf,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(key: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParam {
            key,
            msg: msg.into(),
        }
    }
}
