//! Experiment harness for `localopt-core`: JSON configs, sweeps, the
//! outer-learning-rate versus noise reproduction, and CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod fig1;
pub mod output;

pub use config::{ExperimentSpec, Overrides};
pub use error::CliError;
