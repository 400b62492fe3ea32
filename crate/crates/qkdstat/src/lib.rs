//! Command-line front end, run configuration and file formats for
//! `qkdstat-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

pub use error::{CliError, CliResult};
pub use exec::RayonExecutor;
