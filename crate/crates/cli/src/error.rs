use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("run diverged in round {round}")]
    Diverged { round: usize },

    #[error(transparent)]
    Core(localopt_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.to_owned(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Invalid { .. } => 2,
            CliError::Diverged { .. } => 3,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, key) = match self {
            CliError::Io { .. } => ("io", None),
            CliError::Schema { key, .. } => ("schema", Some(key.clone())),
            CliError::Invalid { key, .. } => ("invalid_argument", Some(key.clone())),
            CliError::Diverged { .. } => ("diverged", None),
            CliError::Core(_) => ("numeric", None),
            CliError::Csv(_) => ("csv", None),
            CliError::Json(_) => ("json", None),
        };
        ErrorReport {
            error: kind,
            key,
            round: match self {
                CliError::Diverged { round } => Some(*round),
                _ => None,
            },
            message: self.to_string(),
        }
    }
}

impl From<localopt_core::Error> for CliError {
    fn from(err: localopt_core::Error) -> Self {
        match err {
            localopt_core::Error::InvalidArgument { key, reason } => CliError::Invalid {
                key: key.to_owned(),
                message: reason,
            },
            localopt_core::Error::Diverged { round } => CliError::Diverged { round },
            other => CliError::Core(other),
        }
    }
}

/// Machine-readable error printed on failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    pub message: String,
}
