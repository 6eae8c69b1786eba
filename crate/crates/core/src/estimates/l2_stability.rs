//! `L₂` bounds for the mean-free perturbation.

use serde::{Deserialize, Serialize};

use crate::field::MeanVector;
use crate::solver::{self, RunKind, Trajectory};

use super::calibrate::StabilityConstants;
use super::report::{InequalityReport, ToleranceModel};
use super::series::{windows, Series};
use super::two_d::TwoDBudget;
use super::EstimateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Budget {
    pub nu: f64,
    pub window: f64,
    pub c1: f64,
    pub c3: f64,
    /// Per-window integrals of the mean and `L_{6/5}` forcing terms.
    pub window_sources: Vec<f64>,
    pub b1_sq: f64,
    /// Uses the enstrophy-budget constant in the exponent.
    pub b2_sq: f64,
    /// Same with the energy-budget constant in the exponent.
    pub b2_sq_energy: f64,
    pub b3_sq: f64,
    pub b4_sq: f64,
    pub b3_sq_energy: f64,
    pub b4_sq_energy: f64,
    /// `νc₁T/2 − 4c₃A₃²/(νc₁)`; must be non-negative.
    pub hypothesis_margin: f64,
    /// `‖ū(0)‖²`.
    pub energy0: f64,
}

impl L2Budget {
    pub fn hypothesis_holds(&self) -> bool {
        self.hypothesis_margin >= 0.0
    }
}

pub(crate) fn require_perturbation(pert: &Trajectory) -> Result<(), EstimateError> {
    if pert.kind != RunKind::Perturbation {
        return Err(EstimateError::WrongRun("a perturbation trajectory".into()));
    }
    if pert.records.len() < 4 {
        return Err(EstimateError::TooShort(pert.records.len()));
    }
    Ok(())
}

/// `|∫₀ᵗ ⨍g + ⨍u(0)|²` at every record time, from the mean-force series.
pub fn mean_drift_sq(pert: &Trajectory) -> Result<Series, EstimateError> {
    let times = pert.times();
    let forcing: Vec<[f64; 3]> = pert.records.iter().map(|r| r.forcing_mean).collect();
    let initial = MeanVector {
        value: pert.records[0].mean,
        time: 0.0,
    };
    let means = solver::mean_ode_integrate(&times, &forcing, initial, (0.0, pert.t_end()))?;
    let values = means
        .iter()
        .map(|m| m.value.iter().map(|x| x * x).sum())
        .collect();
    Ok(Series::new(times, values))
}

pub fn compute_b_constants(
    pert: &Trajectory,
    base: &TwoDBudget,
    constants: &StabilityConstants,
) -> Result<L2Budget, EstimateError> {
    require_perturbation(pert)?;
    let nu = pert.nu;
    let window = base.window;
    let (c1, c3) = (constants.c1, constants.c3);
    let drift = mean_drift_sq(pert)?;
    let l65 = Series::new(
        pert.times(),
        pert.series(|r| r.forcing_l65_sq.unwrap_or(0.0)),
    );
    let source = Series::new(
        drift.times.clone(),
        drift
            .values
            .iter()
            .zip(&l65.values)
            .map(|(m, g)| nu * c1 / (2.0 * c3) * m + 2.0 * c3 / (nu * c1) * g)
            .collect(),
    );
    let wins = windows(pert.t_end(), window);
    if wins.is_empty() {
        return Err(EstimateError::NoWindows {
            t_end: pert.t_end(),
            window,
        });
    }
    let window_sources: Vec<f64> = wins
        .iter()
        .map(|&(_, a, b)| source.window_integral(a, b))
        .collect();
    let b1_sq = window_sources.iter().copied().fold(0.0, f64::max);
    let rate = 4.0 * c3 / (nu * c1);
    let b2_sq = (rate * base.a5_sq).exp() * b1_sq;
    let b2_sq_energy = (rate * base.a3_sq).exp() * b1_sq;
    let q = 1.0 - (-nu * c1 * window / 2.0).exp();
    let energy0 = pert.records[0].norms.l2_sq;
    let b3_sq = b2_sq / q + energy0;
    let b3_sq_energy = b2_sq_energy / q + energy0;
    Ok(L2Budget {
        nu,
        window,
        c1,
        c3,
        window_sources,
        b1_sq,
        b2_sq,
        b2_sq_energy,
        b3_sq,
        b4_sq: b2_sq + b3_sq,
        b3_sq_energy,
        b4_sq_energy: b2_sq_energy + b3_sq_energy,
        hypothesis_margin: nu * c1 * window / 2.0 - rate * base.a3_sq,
        energy0,
    })
}

/// Hypothesis check plus the window-end and running `L₂` bounds. The bounds
/// are vacuous when the hypothesis fails.
pub fn verify_l2_stability(
    pert: &Trajectory,
    budget: &L2Budget,
    tol: &ToleranceModel,
) -> Result<Vec<InequalityReport>, EstimateError> {
    require_perturbation(pert)?;
    let energy = Series::new(pert.times(), pert.series(|r| r.norms.l2_sq));
    let wins = windows(pert.t_end(), budget.window);
    let mut edges = vec![0.0];
    edges.extend(wins.iter().map(|w| w.2));
    let edge_values: Vec<f64> = edges.iter().map(|&t| energy.at(t)).collect();
    let last = wins.last().map(|w| w.2).unwrap_or(0.0);
    let inside = energy.window(0.0, last);

    let hyp = InequalityReport::scalar(
        "4.11.base",
        "window long enough to absorb the base energy: −νc₁T/2 + 4c₃A₃²/(νc₁) ≤ 0",
        budget.hypothesis_margin,
        tol.tol("4.11.base"),
    )
    .hypothesis();
    let reason = hyp
        .is_unmet()
        .then_some("window hypothesis of the L2 bound fails");

    let mut out = vec![hyp];
    let pairs = [
        (
            "4.1.1",
            "energy at window ends is at most B3²",
            budget.b3_sq,
            false,
            true,
        ),
        ("4.1.2", "energy is at most B4²", budget.b4_sq, false, false),
        (
            "4.1.1.energy",
            "window-end bound with the energy-budget exponent",
            budget.b3_sq_energy,
            true,
            true,
        ),
        (
            "4.1.2.energy",
            "running bound with the energy-budget exponent",
            budget.b4_sq_energy,
            true,
            false,
        ),
    ];
    for (id, desc, bound, info, at_edges) in pairs {
        let (times, values) = if at_edges {
            (edges.clone(), edge_values.clone())
        } else {
            (inside.times.clone(), inside.values.clone())
        };
        let margins = values.iter().map(|v| bound - v).collect();
        let r = InequalityReport::conditional(id, desc, times, margins, tol.tol(id), reason);
        out.push(if info { r.informational() } else { r });
    }
    Ok(out)
}
