use std::path::PathBuf;

use thiserror::Error;

/// Harness failures. Configuration problems map to exit status 2, everything
/// else to 1.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration at `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("incompatible reports: {0}")]
    Merge(String),
    #[error(transparent)]
    Core(#[from] cutlab_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid { .. } | HarnessError::Merge(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
