//! Command-line front end for the `sphcard` library: sample ingestion and
//! serialization, the subcommands, and the Monte Carlo experiment harness.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod io;

pub use error::{CliError, CliResult};
