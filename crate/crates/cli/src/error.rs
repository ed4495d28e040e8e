use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed record in an input file.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    /// Unreadable or invalid input other than a bad record.
    #[error("{0}")]
    Input(String),
    #[error("{0}: no points")]
    Empty(String),
    #[error("{0}")]
    Failed(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => 2,
            CliError::Empty(_) => 3,
            CliError::Failed(_) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }

    pub fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn failed(err: impl std::fmt::Display) -> Self {
        CliError::Failed(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
