//! Experiment harness for the dlgibbs laboratory: configuration, orchestration,
//! artifacts and resource estimates.

pub mod config;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod output;

pub use config::{parse_config, parse_config_for, Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiments::{execute, Report};
