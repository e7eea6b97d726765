//! Oversampled joint time-vertex filter banks.

pub mod denoise;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod filterbank;
pub mod generators;
pub mod graph;
pub mod joint;

pub use error::{Error, Result};
