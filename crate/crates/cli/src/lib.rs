//! Experiment runner for the `dtq` binary: config files, named checks,
//! subcommands and report rendering.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use checks::{Check, ReportRow};
pub use config::{ExperimentConfig, Format};
pub use error::{CliError, CliResult};
