//! Command-line front end for `mirrorvis-core`: config ingestion, CSV and
//! report emission, and the cross-method validation battery.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use mirrorvis_core::Error as CoreError;
use thiserror::Error;

pub use config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {0} check(s) did not pass")]
    Validation(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::PositivityViolation { .. }
            | CoreError::NonFinite { .. }
            | CoreError::NotConverged { .. }
            | CoreError::TruncationLeakage { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
