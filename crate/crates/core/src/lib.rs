//! Forward and inverse modelling of NV-center ODMR in a diamond anvil cell,
//! with the pressure-calibration relations used alongside it.
//!
//! Units throughout: MHz for frequencies, GPa for stress, mT for fields.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod fit;
pub mod frames;
pub mod io;
pub mod model;
pub mod spectra;
pub mod spin;
pub mod workflow;

pub use error::ModelError;
pub use model::NvModel;
pub use spin::{StressCouplings, TransitionPair, ZfsParams};
