use std::io;
use std::path::PathBuf;

use albalance_core::dataset::DatasetError;
use albalance_core::imbalance::ImbalanceError;
use albalance_core::runner::RunError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: DatasetError,
    },
    #[error("invalid config {}:\n  {}", path.display(), problems.join("\n  "))]
    Config { path: PathBuf, problems: Vec<String> },
    #[error("{0}")]
    Imbalance(ImbalanceError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("no run records (record_seed*.json) in {}", .0.display())]
    NoRecords(PathBuf),
    #[error("{}: not a run record: {source}", path.display())]
    BadRecord {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("records come from different configurations: {0}")]
    MixedConfig(String),
    #[error("ALBALANCE_THREADS must be a positive integer, got {0:?}")]
    Threads(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for infeasible targets and mixed configurations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Imbalance(
                ImbalanceError::Infeasible { .. }
                | ImbalanceError::FloorInfeasible { .. }
                | ImbalanceError::NotConverged { .. },
            )
            | CliError::MixedConfig(_) => 2,
            _ => 1,
        }
    }
}

impl From<ImbalanceError> for CliError {
    fn from(e: ImbalanceError) -> Self {
        CliError::Imbalance(e)
    }
}
