use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("{key}: contradictory settings: {message}")]
    Contradiction { key: String, message: String },

    #[error("config schema: {0}")]
    Schema(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("serialization: {0}")]
    Serialize(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] arofsim_core::Error),
}

/// The machine-readable form written on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        Self::Config { key: key.to_string(), message: message.into() }
    }

    pub fn contradiction(key: &str, message: impl Into<String>) -> Self {
        Self::Contradiction { key: key.to_string(), message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Contradiction { .. } => "contradiction",
            Self::Schema(_) => "schema",
            Self::Io { .. } => "io",
            Self::Serialize(_) => "serialize",
            Self::Usage(_) => "usage",
            Self::Core(arofsim_core::Error::Infeasible(_)) => "infeasible",
            Self::Core(_) => "simulation",
        }
    }

    /// 2 for anything wrong with the input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Contradiction { .. } | Self::Schema(_) | Self::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let key = match self {
            Self::Config { key, .. } | Self::Contradiction { key, .. } => Some(key.clone()),
            _ => None,
        };
        ErrorReport { kind: self.kind(), key, message: self.to_string(), exit_code: self.exit_code() }
    }
}
