//! Configuration-driven experiments on top of `marchaud-core`, each writing
//! a CSV report.

pub mod config;
pub mod run;
pub mod suite;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use run::{exit, run, Outcome, RunError};
