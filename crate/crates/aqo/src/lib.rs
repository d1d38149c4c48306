//! File formats and command-line front end for `aqo-core`.

pub mod cli;
pub mod commands;
mod error;
pub mod io;

pub use error::{CliError, Result};
