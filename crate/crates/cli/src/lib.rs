//! Command-line surface for `fairmatch`: instance generation, single runs,
//! experiment presets and exact oracles.

pub mod args;
mod commands;
mod output;
mod params;

pub use args::Cli;
pub use commands::{execute, GENERATORS, PRESETS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("acceptance targets failed: {0}")]
    Targets(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Targets(_) => 3,
        }
    }
}

impl From<fairmatch::Error> for CliError {
    fn from(e: fairmatch::Error) -> Self {
        match e {
            fairmatch::Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
