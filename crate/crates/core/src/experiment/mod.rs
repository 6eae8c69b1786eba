//! Configured experiments: one planar base run, an optional perturbation run
//! and an optional direct three-dimensional run, checked against the decay
//! and stability estimates and written to an artifact directory.

use std::path::PathBuf;

use thiserror::Error;

use crate::error::{FieldError, SnapshotError};
use crate::estimates::EstimateError;
use crate::solver::SolverError;

pub mod run;
pub mod scenarios;
pub mod spec;
pub mod sweep;

pub use run::{
    emit_report, format_report, run_checks, run_experiment, simulate, verify, Budgets, Checks,
    RunArtifacts, RunInfo, Runs, Summary,
};
pub use spec::{parse_config, ExperimentSpec, GridSpec, InitialSpec, RunSpec, StabilitySpec};
pub use sweep::{sweep, SweepGrid, SweepMember};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_MISSING: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(
        "γ = {gamma} exceeds γ* = {gamma_star}; the dissipation budget νc₄ − c₅γ²/ν³ ≥ c*/2 \
         would fail. Lower stability.gamma or use stability.gamma_fraction ≤ 1"
    )]
    GammaTooLarge { gamma: f64, gamma_star: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(PathBuf),
}

impl ExperimentError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::MissingArtifacts(_) => EXIT_MISSING,
            _ => EXIT_ERROR,
        }
    }
}
