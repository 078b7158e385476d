//! JSON formats and the command line for `flowtab-core`.

pub mod cli;
mod error;
pub mod io;
pub mod parallel;

pub use cli::{run, run_with};
pub use error::{error_json, CliError, EXIT_CERTIFICATION, EXIT_INPUT, EXIT_OK, EXIT_RESOURCE};
