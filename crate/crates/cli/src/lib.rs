//! Command-line orchestration of the stablelab experiments: configuration, dispatch,
//! artifacts, manifests and the summary report.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod report;

pub use config::{validate_config, validate_with, Experiment, ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use experiments::{compute, run_experiment, Outcome};
pub use manifest::{Check, RunManifest, Status};
pub use report::{emit_report, Report};
