use std::path::PathBuf;

use lleinc::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: lleinc::Error },
    #[error("{}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
    #[error("seed {seed}: {source}")]
    Seed { seed: u64, source: lleinc::Error },
    #[error(transparent)]
    Core(#[from] lleinc::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let kind = match self {
            CliError::Input { source, .. } | CliError::Seed { source, .. } | CliError::Core(source) => source.kind(),
            CliError::Output { .. } => ErrorKind::Io,
            CliError::Usage(_) => return 2,
        };
        match kind {
            ErrorKind::Io => 3,
            ErrorKind::Data => 4,
            ErrorKind::Config => 5,
            ErrorKind::Numerical => 6,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
