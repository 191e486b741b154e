//! Command-line front end for `orbitlap`: CSV dataset ingestion, JSON run
//! configuration and reports, and the `estimate`, `classify`, `sample`,
//! `loglik` and `selftest` commands.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod selftest;

pub use commands::{exit, CommandOutput};
pub use error::{CliError, CliResult};
