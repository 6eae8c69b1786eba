//! Executable versions of the energy, decay and stability estimates,
//! evaluated on stored trajectories.

use thiserror::Error;

use crate::error::FieldError;
use crate::solver::SolverError;

pub mod calibrate;
pub mod conditions;
pub mod l2_stability;
pub mod report;
pub mod series;
pub mod stability;
pub mod two_d;

#[cfg(test)]
mod tests;

pub use calibrate::{
    calibrate_constants, constants_from_c3, gamma_star, Calibration, StabilityConstants,
};
pub use l2_stability::{compute_b_constants, verify_l2_stability, L2Budget};
pub use report::{InequalityReport, ReportSet, Status, ToleranceModel};
pub use series::Series;
pub use stability::{
    check_stability_hypotheses, gronwall_envelope, stability_series, verify_stability_conclusion,
    Envelope, StabilityBudget, StabilitySeries,
};
pub use two_d::{
    compute_a_constants, verify_decay_2d, vorticity_cancellation_residual, w1sigma_monitor,
    TwoDBudget, W1SigmaMonitor,
};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("expected {0}")]
    WrongRun(String),
    #[error("trajectory has only {0} samples")]
    TooShort(usize),
    #[error("no full window of length {window} fits in [0, {t_end}]")]
    NoWindows { t_end: f64, window: f64 },
    #[error("missing diagnostic series: {0}")]
    MissingSeries(String),
    #[error("integrability exponent σ must exceed 3, got {0}")]
    BadSigma(f64),
    #[error("invalid stability budget: {0}")]
    BadBudget(String),
    #[error("γ = {gamma} exceeds the admissible γ* = {gamma_star}")]
    GammaTooLarge { gamma: f64, gamma_star: f64 },
}
