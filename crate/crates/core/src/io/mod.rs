//! Configuration documents, the spectrum CSV format, and SVG previews.

pub mod config;
pub mod csv;
pub mod plot;

use thiserror::Error;

pub use config::{RunConfig, SpectrumMetadata};
pub use csv::{format_sig9, SpectrumFile};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("could not parse config: {0}")]
    ConfigSyntax(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        IoError::InvalidConfig { field: field.to_string(), reason: reason.into() }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        IoError::Parse { line, reason: reason.into() }
    }

    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::File { path: path.display().to_string(), source }
    }
}
