//! Command-line driver: configuration, runs, verification and comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

pub use error::{CliError, Result};
