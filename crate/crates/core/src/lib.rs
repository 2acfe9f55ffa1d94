//! Exposure-uncertainty risk engine for bridge portfolios under scenario
//! earthquakes.
//!
//! The pipeline imputes missing structural attributes as calibrated class
//! distributions, samples spatially correlated ground motion, propagates
//! damage and repair cost per realization, and splits the loss variance into
//! a baseline part and an exposure part.

pub mod analysis;
pub mod decomposition;
pub mod error;
pub mod fragility;
pub mod hazard;
pub mod imputation;
pub mod inventory;
pub mod loss;
pub mod pipeline;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
