//! Library surface of the command-line front end, exposed so integration
//! tests can drive commands in-process.

pub mod args;
pub mod commands;
pub mod error;

pub use error::{CliError, CliResult};
