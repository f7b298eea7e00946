//! Simulation of open quantum systems under Lindblad dynamics and
//! transformer-based regression of their dissipation rates.

pub mod bernstein;
pub mod cli;
pub mod dataset;
pub mod features;
pub mod inversion;
mod jsonfmt;
pub mod error;
pub mod models;
pub mod nn;
pub mod quantum;
pub mod sim;

pub use error::{Error, Result};
