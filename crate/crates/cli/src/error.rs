use std::path::PathBuf;

use oclust_core::OclustError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, column: usize, message: String },

    #[error("{0}")]
    Input(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] OclustError),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_STALL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(OclustError::GenerationStall { .. }) => EXIT_STALL,
            CliError::Core(e) if e.is_degenerate() || matches!(e, OclustError::Aborted { .. }) => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        let path = path.into();
        let (line, column) = match err.position() {
            Some(pos) => (pos.line(), 0),
            None => (0, 0),
        };
        match err.into_kind() {
            csv::ErrorKind::Io(source) => CliError::Io { path, source },
            kind => CliError::Parse { path, line, column, message: format!("{kind:?}") },
        }
    }
}
