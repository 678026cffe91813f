use std::path::PathBuf;

use thiserror::Error;

/// Failures that stop a scenario before any certificate is computed.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}:{column}: schema error at `{path}`: {msg}")]
    Schema {
        file: String,
        line: usize,
        column: usize,
        path: String,
        msg: String,
    },

    #[error("{file}: invalid `{field}`: {source}")]
    Invalid {
        file: String,
        field: String,
        #[source]
        source: converse_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            CliError::Schema { .. } | CliError::Invalid { .. } | CliError::Usage(_)
        )
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
