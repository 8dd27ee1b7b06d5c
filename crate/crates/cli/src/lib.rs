//! Library side of the `hierlqr` command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod report;

use hierlqr::error::Error;

pub use commands::{cmd_compare, cmd_learn, cmd_synth, Outcome};
pub use config::ScenarioConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}", describe(.0))]
    Numerical(#[from] Error),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(e) if matches!(e.root(), Error::InsufficientExcitation { .. }) => 4,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Error text with 1-based group numbers.
fn describe(e: &Error) -> String {
    match e {
        Error::Group { group, source } => format!("group {}: {}", group + 1, describe(source)),
        other => other.to_string(),
    }
}
