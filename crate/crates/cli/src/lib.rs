//! Subcommand implementations behind the `stormcast` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod transport;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
