//! File formats, campaign orchestration, and error plumbing for the
//! flexured-gimbal measurement toolkit.
//!
//! The pipeline is file-mediated: every stage reads and writes plain files
//! (CSV traces, a TOML manifest and calibration, JSON reports), so recorded
//! hardware data can replace any simulated stage. All files carry a
//! `format_version` field, currently 1.

use std::path::PathBuf;

use flexgim_core::dynamics::DynamicsError;
use flexgim_core::estimation::EstimationError;
use flexgim_core::model::ModelError;

pub mod campaign;
pub mod manifest;
pub mod report;
pub mod trace;
pub mod units;

/// Current on-disk format version for every file this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Toolkit-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("report {path}: {message}")]
    Report { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for this failure. Distinct classes get distinct
    /// codes so scripted callers can branch on them:
    ///
    /// - 3 — manifest errors (missing keys, bad units, invalid grids)
    /// - 4 — data-file parse errors (traces, points, reports)
    /// - 5 — trim convergence failures and simulation divergence
    /// - 6 — rank deficiency and other degenerate estimation inputs
    /// - 1 — everything else
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Manifest { .. } => 3,
            Error::Parse { .. } | Error::Report { .. } => 4,
            Error::Dynamics(DynamicsError::ConvergenceFailure { .. })
            | Error::Dynamics(DynamicsError::Divergence { .. }) => 5,
            Error::Estimation(
                EstimationError::RankDeficient
                | EstimationError::OneSidedTorques
                | EstimationError::CoincidentPoints
                | EstimationError::TooFewSamples { .. }
                | EstimationError::DegenerateRange,
            ) => 6,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
