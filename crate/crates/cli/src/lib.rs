//! Configuration-driven experiment runs on top of the `gqas` library.

pub mod config;
pub mod error;
pub mod experiment;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use runner::{overlaps, run, sweep, RunOptions};
