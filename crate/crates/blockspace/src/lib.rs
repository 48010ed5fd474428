//! Files, configuration, parallel drivers and the command-line interface
//! around `blockspace-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod plot;
pub mod report;

pub use error::{CliError, Result};
pub use report::RunReport;
