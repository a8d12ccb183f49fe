//! Command line, configuration and file formats around `aft-core`.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod focus;
pub mod formats;
pub mod metrics;
pub mod models;

pub use config::{BenchConfig, RunConfig};
pub use error::{CliError, CliResult};
