//! Experiment driver for the `dirgibbs` samplers.
//!
//! Each experiment expands a [`config::RunConfig`] into a grid of seeded
//! runs, executes them in parallel and writes CSV files in a fixed order,
//! so the same configuration always produces the same bytes.

pub mod config;
pub mod experiments;
pub mod output;
pub mod seeding;
pub mod target_file;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] dirgibbs::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration and file problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Self::Io(io),
            other => Self::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}
