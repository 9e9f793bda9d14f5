use std::path::PathBuf;

use crate::env::ConstraintViolation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("{0}")]
    Csv(#[from] crate::signal::CsvError),
    #[error("action rejected: {0}")]
    Constraint(#[from] ConstraintViolation),
    #[error("no dataset attached to the environment")]
    MissingDataset,
    #[error("non-finite {what} in {component}")]
    NonFinite { component: &'static str, what: String },
    #[error(transparent)]
    Nn(#[from] bci_nn::NnError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Configuration problems map to exit code 1, everything else to 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
