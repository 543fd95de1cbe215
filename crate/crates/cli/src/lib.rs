//! Configuration, output formats and experiment drivers for the
//! `simulate` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod records;
pub mod snapshot;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
