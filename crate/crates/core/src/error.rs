use thiserror::Error;

/// Errors raised by the forward model and calibration relations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("out of domain: {0}")]
    Domain(String),
}
