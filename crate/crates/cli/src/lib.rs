//! Command-line plumbing for `lieposenet`: experiment configs, the parallel
//! run executor and report generation.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, LoadedConfig, ResolvedMethod, TrainSettings};
pub use error::{CliError, Result};
pub use runner::{run_experiment, EpochRow, RunOptions, RunSummary};
