use std::path::PathBuf;

use thiserror::Error;

use crate::attack::AttackError;
use crate::covariance::CovarianceError;
use crate::grid_io::GridError;
use crate::harness::ConfigError;
use crate::rmt::RmtError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Covariance(#[from] CovarianceError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Rmt(#[from] RmtError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("need at least {required} trials, got {got}")]
    InsufficientTrials { required: usize, got: usize },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

/// Coarse classification, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Grid(GridError::Io { .. }) | Error::Io { .. } => ErrorKind::Io,
            Error::Grid(GridError::RankDeficient { .. }) => ErrorKind::Numeric,
            Error::Grid(_) | Error::Config(_) | Error::InsufficientTrials { .. } | Error::Manifest(_) => {
                ErrorKind::Config
            }
            Error::Covariance(_) | Error::Attack(_) | Error::Rmt(_) | Error::DegenerateSamples(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
