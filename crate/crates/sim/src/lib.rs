//! Monte Carlo harness around the dyadic coupling in `kmt-core`: experiment
//! configs, replication driver, statistical checks, output files and reports.

pub mod catalog;
pub mod checks;
pub mod config;
pub mod error;
mod float;
pub mod harness;
pub mod model;
pub mod output;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod validate;

pub use error::{Result, SimError};
