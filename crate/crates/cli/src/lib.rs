//! Library side of the `aqft` command: configuration, report documents and
//! the suite runner.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use error::{CliError, Result};
