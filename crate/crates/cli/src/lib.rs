//! Experiment runner for the kpzlab simulation library: configuration,
//! replica scheduling, experiments and their CSV, JSON and SVG reports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod pool;
pub mod report;
pub mod svg;
pub mod verify;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiments::{run_experiment, Ctx};
pub use report::ReportBundle;
