//! Config parsing, band cache and command dispatch for the `cyldtn` binary.

pub mod cache;
pub mod commands;
pub mod config;

pub use commands::{run, CliError, Command, Context, Outcome};
pub use config::{config_hash, parse_config, ConfigError, RunConfig};
