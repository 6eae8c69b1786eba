//! Energy and enstrophy bounds for the planar base flow.
//!
//! All quantities refer to the mean-free part `v̄` of the base velocity and
//! are measured on the three-dimensional box, as stored in base trajectories.

use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::field::Field;
use crate::norms;
use crate::solver::{RunKind, Trajectory};

use super::report::{InequalityReport, ToleranceModel};
use super::series::{windows, Series};
use super::EstimateError;

/// Constants of the window-by-window energy and enstrophy bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDBudget {
    pub nu: f64,
    pub window: f64,
    /// Poincaré constant of `c ‖v̄‖²_{H¹} ≤ ‖∇v̄‖²`.
    pub c_poincare: f64,
    /// `∫_{kT}^{(k+1)T} ‖f̄‖²` for every full window.
    pub window_forcing: Vec<f64>,
    pub a1_sq: f64,
    pub a2_sq: f64,
    pub a3_sq: f64,
    pub a4_sq: f64,
    pub a5_sq: f64,
    /// `‖v̄(0)‖²`.
    pub energy0: f64,
    /// `‖∇v̄(0)‖²`.
    pub enstrophy0: f64,
}

impl TwoDBudget {
    /// `1 − e^{−ν c T}`.
    pub fn contraction(&self) -> f64 {
        1.0 - (-self.nu * self.c_poincare * self.window).exp()
    }

    pub fn sup_window_forcing(&self) -> f64 {
        self.window_forcing.iter().copied().fold(0.0, f64::max)
    }
}

fn require_base(base: &Trajectory) -> Result<(), EstimateError> {
    if base.kind != RunKind::Base {
        return Err(EstimateError::WrongRun("a planar base trajectory".into()));
    }
    if base.records.len() < 4 {
        return Err(EstimateError::TooShort(base.records.len()));
    }
    Ok(())
}

fn series(traj: &Trajectory, f: impl Fn(&crate::solver::StepRecord) -> f64) -> Series {
    Series::new(traj.times(), traj.series(f))
}

/// Evaluate the constants from the stored forcing series. `c_poincare`
/// defaults to the sharp torus constant.
pub fn compute_a_constants(
    base: &Trajectory,
    window: f64,
    c_poincare: Option<f64>,
) -> Result<TwoDBudget, EstimateError> {
    require_base(base)?;
    let wins = windows(base.t_end(), window);
    if wins.is_empty() {
        return Err(EstimateError::NoWindows {
            t_end: base.t_end(),
            window,
        });
    }
    let c = c_poincare.unwrap_or_else(|| norms::poincare_constant(&base.grid));
    let nu = base.nu;
    let force = series(base, |r| r.forcing_l2_sq);
    let window_forcing: Vec<f64> = wins
        .iter()
        .map(|&(_, a, b)| force.window_integral(a, b))
        .collect();
    let sup = window_forcing.iter().copied().fold(0.0, f64::max);
    let first = &base.records[0].norms;
    let a1_sq = sup / (nu * c);
    let q = 1.0 - (-nu * c * window).exp();
    let a2_sq = a1_sq / q + first.l2_sq;
    let a4_sq = c * a1_sq / q + first.grad_l2_sq;
    Ok(TwoDBudget {
        nu,
        window,
        c_poincare: c,
        window_forcing,
        a1_sq,
        a2_sq,
        a3_sq: a1_sq + a2_sq,
        a4_sq,
        a5_sq: a1_sq + a4_sq,
        energy0: first.l2_sq,
        enstrophy0: first.grad_l2_sq,
    })
}

/// Three-point derivative at every sample (one-sided at the ends).
fn derivative(s: &Series) -> Vec<f64> {
    let n = s.len();
    let v = &s.values;
    let h = s.times[1] - s.times[0];
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Window endpoint bounds, running energy/enstrophy bounds, the pointwise
/// energy inequality and the Poincaré inequality along the base trajectory.
pub fn verify_decay_2d(
    base: &Trajectory,
    budget: &TwoDBudget,
    tol: &ToleranceModel,
) -> Result<Vec<InequalityReport>, EstimateError> {
    require_base(base)?;
    let nu = budget.nu;
    let c = budget.c_poincare;
    let energy = series(base, |r| r.norms.l2_sq);
    let h1 = series(base, |r| r.norms.h1_sq);
    let h2 = series(base, |r| r.norms.h2_sq);
    let grad = series(base, |r| r.norms.grad_l2_sq);
    let force = series(base, |r| r.forcing_l2_sq);
    let wins = windows(base.t_end(), budget.window);

    let mut out = Vec::new();

    // Window endpoints, including t = 0 and the last full window's end.
    let mut edge_times = vec![0.0];
    edge_times.extend(wins.iter().map(|w| w.2));
    let (mut m31, mut m34) = (Vec::new(), Vec::new());
    for &t in &edge_times {
        m31.push(budget.a2_sq - energy.at(t));
        m34.push(budget.a4_sq - grad.at(t));
    }
    out.push(InequalityReport::evaluate(
        "3.1",
        "energy at window ends is at most A2²",
        edge_times.clone(),
        m31,
        tol.tol("3.1"),
    ));

    let (mut t32, mut m32, mut m35) = (Vec::new(), Vec::new(), Vec::new());
    for &(_, a, b) in &wins {
        let e = energy.window(a, b);
        let g = grad.window(a, b);
        let ih1 = h1.window_cumulative(a, b);
        let ih2 = h2.window_cumulative(a, b);
        for i in 1..e.len() {
            t32.push(e.times[i]);
            m32.push(budget.a3_sq - (e.values[i] + nu * c * ih1.values[i]));
            m35.push(budget.a5_sq - (g.values[i] + nu * c * ih2.values[i]));
        }
    }
    out.push(InequalityReport::evaluate(
        "3.2",
        "energy plus dissipated H1 inside each window is at most A3²",
        t32.clone(),
        m32,
        tol.tol("3.2"),
    ));

    let de = derivative(&energy);
    let m33 = (0..energy.len())
        .map(|i| force.values[i] / (nu * c) - (de[i] + nu * c * h1.values[i]))
        .collect();
    out.push(InequalityReport::evaluate(
        "3.3",
        "energy inequality d/dt‖v̄‖² + νc‖v̄‖²_H1 ≤ ‖f̄‖²/(νc)",
        energy.times.clone(),
        m33,
        tol.tol("3.3"),
    ));

    out.push(InequalityReport::evaluate(
        "3.4",
        "enstrophy at window ends is at most A4²",
        edge_times,
        m34,
        tol.tol("3.4"),
    ));
    out.push(InequalityReport::evaluate(
        "3.5",
        "enstrophy plus dissipated H2 inside each window is at most A5²",
        t32,
        m35,
        tol.tol("3.5"),
    ));

    let m23 = (0..h1.len())
        .map(|i| grad.values[i] - c * h1.values[i])
        .collect();
    out.push(InequalityReport::evaluate(
        "2.3",
        "Poincaré inequality c‖v̄‖²_H1 ≤ ‖∇v̄‖²",
        h1.times.clone(),
        m23,
        tol.tol("2.3"),
    ));
    Ok(out)
}

/// `|∫ v·∇v̄·Δv̄| / (‖v‖_{H¹}‖v̄‖²_{H²})` for a planar divergence-free field,
/// with the triple product integrated on a doubled grid (exact for
/// band-limited fields).
pub fn vorticity_cancellation_residual(v: &Field) -> Result<f64, FieldError> {
    let grid = *v.grid();
    if grid.dim() != 2 || !v.is_vector() {
        return Err(FieldError::NotTwoDimensional);
    }
    let div = v.relative_divergence()?;
    if div > 1e-10 {
        return Err(FieldError::NotDivergenceFree(div));
    }
    let scale = norms::sobolev_norm_sq(v, 1)?.sqrt() * norms::sobolev_norm_sq(v, 2)?;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let fine = grid.with_n(2 * grid.n())?;
    let pad = |f: &Field| -> Result<Vec<f64>, FieldError> {
        let coeffs = crate::fft::pad(&grid, &f.spectral()[0], &fine);
        Ok(crate::fft::inverse(&fine, &coeffs))
    };
    let mut vel = Vec::new();
    for a in 0..2 {
        vel.push(pad(&v.component(a))?);
    }
    let lap = v.laplacian();
    let mut total = 0.0;
    for c in 0..2 {
        let lc = pad(&lap.component(c))?;
        for a in 0..2 {
            let d = pad(&v.component(c).derivative(a, 1)?)?;
            for i in 0..lc.len() {
                total += vel[a][i] * d[i] * lc[i];
            }
        }
    }
    let integral = total * fine.volume() / fine.physical_len() as f64;
    Ok(integral.abs() / scale)
}

/// Maxima of `‖v‖_{W¹_σ}` (full base velocity, box measure) over each window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W1SigmaMonitor {
    pub sigma: f64,
    pub window_maxima: Vec<f64>,
    pub sup: f64,
}

pub fn w1sigma_monitor(
    base: &Trajectory,
    window: f64,
    sigma: f64,
    tol: &ToleranceModel,
) -> Result<(W1SigmaMonitor, InequalityReport), EstimateError> {
    require_base(base)?;
    if sigma <= 3.0 {
        return Err(EstimateError::BadSigma(sigma));
    }
    let factor = base.measure_factor.powf(1.0 / sigma);
    let samples: Vec<(f64, f64)> = base
        .snapshots
        .iter()
        .map(|s| Ok((s.time(), norms::w1_sigma(s, sigma)? * factor)))
        .collect::<Result<_, FieldError>>()?;
    let wins = windows(base.t_end(), window);
    if wins.is_empty() {
        return Err(EstimateError::NoWindows {
            t_end: base.t_end(),
            window,
        });
    }
    let slack = 1e-9 * base.dt;
    let maxima: Vec<f64> = wins
        .iter()
        .map(|&(_, a, b)| {
            samples
                .iter()
                .filter(|(t, _)| *t >= a - slack && *t <= b + slack)
                .map(|s| s.1)
                .fold(0.0, f64::max)
        })
        .collect();
    let sup = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let first = maxima[0];
    let times = wins.iter().map(|w| w.1).collect();
    let margins = maxima.iter().map(|m| first - m).collect();
    let report = InequalityReport::evaluate(
        "3.8",
        "W1_sigma window maxima stay below the first window's maximum",
        times,
        margins,
        tol.tol("3.8") + 1e-9 * first,
    )
    .informational();
    Ok((
        W1SigmaMonitor {
            sigma,
            window_maxima: maxima,
            sup,
        },
        report,
    ))
}
