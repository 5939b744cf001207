use std::path::PathBuf;

use serde::Serialize;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("unknown reproduction id {0:?}")]
    UnknownId(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),

    #[error(transparent)]
    Core(#[from] tdrw_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Structured form printed on standard error.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::UnknownId(_) | CliError::Parse(_) => exit::INVALID,
            CliError::Core(tdrw_core::Error::Domain { .. }) => exit::INVALID,
            _ => exit::FAIL,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, field) = match self {
            CliError::Validation { field, .. } => ("validation", Some(field.clone())),
            CliError::UnknownId(_) => ("unknown-id", None),
            CliError::Parse(_) => ("parse", None),
            CliError::Io { .. } => ("io", None),
            CliError::Csv(_) => ("csv", None),
            CliError::Pool(_) => ("thread-pool", None),
            CliError::Core(tdrw_core::Error::Domain { field, .. }) => ("validation", Some(field.to_string())),
            CliError::Core(_) => ("computation", None),
        };
        let message = match self {
            CliError::Validation { message, .. } => message.clone(),
            CliError::Core(tdrw_core::Error::Domain { message, .. }) => message.clone(),
            other => other.to_string(),
        };
        ErrorReport {
            kind,
            field,
            message,
            exit_code: self.exit_code(),
        }
    }
}
