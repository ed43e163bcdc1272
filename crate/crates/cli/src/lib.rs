//! Command implementations behind the `exact-wins` binary.

pub mod commands;
pub mod error;
pub mod formats;
pub mod report;

pub use error::{CliError, Result};
