//! Experiment runners, statistics, file formats and configuration for the
//! `galerkin` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
