//! Reproducible experiment runner over `trimul-core`.

pub mod config;
pub mod report;
pub mod run;
pub mod selftest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] trimul_core::error::Error),
    #[error("{0} self-checks failed")]
    SelfTest(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelfTest(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_io() => 4,
            CliError::Core(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
