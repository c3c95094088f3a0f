use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed trace: {msg}")]
    Trace { path: PathBuf, msg: String },
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Core(#[from] hotune::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn trace(path: &Path, msg: impl ToString) -> Self {
        CliError::Trace { path: path.to_path_buf(), msg: msg.to_string() }
    }
}
