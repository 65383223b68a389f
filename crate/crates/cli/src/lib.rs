//! Experiment runner for the parabolic majorant: configuration files, the
//! built-in benchmark problems and the report writer.

pub mod config;
pub mod problems;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use run::{execute, Outcome, RunError, RunOptions};
