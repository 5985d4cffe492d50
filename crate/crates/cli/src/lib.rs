//! Library side of the `ambc` command: configuration files, frame files,
//! CSV tables and SVG plots.

pub mod commands;
pub mod config;
pub mod frame_io;
pub mod plot;
pub mod table;

use std::path::PathBuf;

/// Everything that can stop a command, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ambc_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and usage problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_config() => 2,
            CliError::Core(_) => 3,
            CliError::Usage(_) | CliError::ConfigFile { .. } => 2,
            CliError::Io { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
