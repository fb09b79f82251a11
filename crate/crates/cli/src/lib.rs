//! Experiment driver behind the `vqe-forge` binary.

pub mod config;
pub mod error;
pub mod presets;
pub mod run;

pub use config::{load, Loaded, Method, Overrides, RunConfig};
pub use error::CliError;
