//! Experiment harness around [`psra_core`]: TOML configuration, CSV
//! output, embedded reference tables and parallel replications.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod reference;

pub use commands::{run, CheckReport, Command, Outcome};
pub use config::ExperimentConfig;
pub use error::CliError;
