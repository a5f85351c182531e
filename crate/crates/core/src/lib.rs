//! Nonparametric graphical tests for functional general linear models.
//!
//! The crate fits a general linear model at every point of a discretized
//! functional domain, generates null replicates with the Freedman-Lane
//! residual permutation scheme and compares the observed coefficient
//! functions with the permuted ones through the global extreme rank length
//! envelope test. A pointwise-F / F-max test is provided as a baseline, and
//! [`simulate`] reproduces Monte-Carlo power studies.

pub mod cli;
pub mod envelope;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod permute;
pub mod plot;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
