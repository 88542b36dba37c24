//! Command-line runner for the quantum graph neural network experiments.

pub mod config;
pub mod run;

pub use config::{load_config, parse_config, Experiment, Overrides, RunConfig};
pub use run::{run, RunOutcome};
