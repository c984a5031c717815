//! Inverse problems: peak extraction, stress and field fits, sensitivity.

pub mod inversion;
pub mod lm;
pub mod peaks;

use thiserror::Error;

use crate::error::ModelError;

pub use inversion::{
    fit_field, fit_stress, sensitivity_estimate, FieldFitResult, Sensitivity, StressFitResult,
};
pub use peaks::{extract_peaks, PeakSet};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no resonance found in spectrum")]
    NoPeaks,
    #[error("peak fit did not converge: {reason}")]
    PeakNoConvergence { best: Box<PeakSet>, reason: String },
    #[error("under-determined fit: {0}")]
    UnderDetermined(String),
    #[error("stress fit did not converge after {} iterations", best.iterations)]
    NoConvergence { best: Box<StressFitResult> },
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
