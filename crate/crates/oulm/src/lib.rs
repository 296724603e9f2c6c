//! Multi-observer synthetic segmentation benchmark with Monte Carlo dropout
//! uncertainty.
//!
//! The library generates observer-annotated synthetic data ([`synthgen`]),
//! fuses observer labels into training targets ([`fusion`]), trains a
//! dropout-equipped convolutional segmenter and samples its predictive
//! distribution ([`nn`]), and scores how well the resulting uncertainty maps
//! reflect inter-observer disagreement ([`metrics`]). [`harness`] wires these
//! stages into a reproducible end-to-end experiment.

pub mod error;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};
