//! Multiscale bootstrap resampling and corrected p-values for hierarchical
//! clustering and general region hypotheses.

pub mod counts;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod grid;
pub mod hclust;
pub mod models;
pub mod pvalues;
pub mod par;
pub mod region;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
