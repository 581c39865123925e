//! Command-line front end for `ptwalk`: each subcommand runs one study and
//! emits a [`Table`] as CSV or JSON.

pub mod commands;
pub mod table;

pub use commands::{run, Cli, Command};
pub use table::{Cell, Format, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error(transparent)]
    Model(#[from] ptwalk::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed table: {0}")]
    Parse(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse(_) => 2,
            CliError::Model(e) if e.is_numerical() => 3,
            CliError::Model(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}
