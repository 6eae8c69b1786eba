//! Time integration of the full three-dimensional system, the planar base
//! flow and the perturbation system, plus the mean ODEs and analytic
//! reference solutions.

mod ops;
mod stepper;
mod trajectory;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use thiserror::Error;

use crate::error::{FieldError, SnapshotError};
use crate::field::{Field, MeanVector};
use crate::forcing::ForcingField;
use crate::grid::TorusGrid;
use crate::io;
use crate::norms::{self, NormLevel, DEFAULT_SIGMA};
use crate::quadrature::{self, QuadratureRule};

pub use ops::{broadcast_planar, SpectralOps, Spectrum};
pub use stepper::{Nonlinear, Stepper, TimeScheme};
pub use trajectory::{AbortInfo, RunKind, StepRecord, Trajectory, TrajectorySummary};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("forcing must be planar (no third component, no x3 dependence)")]
    NotPlanar,
    #[error("interval [{t0}, {t1}] is not covered by {what}")]
    Coverage { what: String, t0: f64, t1: f64 },
    #[error("blow-up at step {} (t = {}): {}", .0.abort.as_ref().map_or(0, |a| a.step), .0.t_end(), .0.abort.as_ref().map_or("", |a| a.reason.as_str()))]
    BlowUp(Box<Trajectory>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: TorusGrid,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Window length `T` of the step-by-step analysis.
    pub window: f64,
    pub snapshot_stride: usize,
    pub scheme: TimeScheme,
    pub sigma: f64,
}

impl SolverConfig {
    pub fn new(grid: TorusGrid, nu: f64, dt: f64, t_end: f64) -> Self {
        SolverConfig {
            grid,
            nu,
            dt,
            t_end,
            window: t_end,
            snapshot_stride: 1,
            scheme: TimeScheme::IntegratingFactor,
            sigma: DEFAULT_SIGMA,
        }
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("time step must be positive, got {}", self.dt));
        }
        if !(self.window > 0.0 && self.t_end >= self.window * (1.0 - 1e-12)) {
            return bad(format!(
                "need t_end >= window > 0, got t_end = {}, window = {}",
                self.t_end, self.window
            ));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return bad(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            ));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot stride must be at least 1".into());
        }
        if self.sigma <= 3.0 {
            return bad(format!("sigma must exceed 3, got {}", self.sigma));
        }
        if self.scheme == TimeScheme::Imex {
            let kmax = self.grid.scale() * self.grid.dealias_cutoff() as f64;
            let h = self.nu * kmax * kmax * self.grid.dim() as f64 * self.dt;
            if h > 2.0 {
                return bad(format!(
                    "Crank-Nicolson step too large for the viscous scale (nu |k|^2 dt = {h:.3} > 2)"
                ));
            }
        }
        Ok(())
    }

    fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Full incompressible Navier-Stokes without viscosity: `−P(v·∇v) + P f`.
struct Navier<'a> {
    ops: &'a SpectralOps,
    forcing: &'a ForcingField,
}

fn projected_forcing(ops: &SpectralOps, forcing: &ForcingField, t: f64) -> Spectrum {
    let mut f = forcing.eval(t);
    ops.truncate(&mut f);
    ops.project(&mut f);
    f
}

fn add_into(a: &mut Spectrum, b: &Spectrum) {
    for (x, y) in a.iter_mut().zip(b) {
        for (p, q) in x.iter_mut().zip(y) {
            *p += q;
        }
    }
}

impl Nonlinear for Navier<'_> {
    fn eval(&mut self, state: &Spectrum, t: f64) -> Spectrum {
        let w = self.ops.to_physical(state);
        let mut out = self.ops.convective(&w, None);
        if !self.forcing.is_zero() {
            add_into(&mut out, &projected_forcing(self.ops, self.forcing, t));
        }
        out
    }

    fn mean_forcing(&self, t: f64) -> [f64; 3] {
        self.forcing.mean(t)
    }
}

/// Perturbation system: `−P[(u+v_s)·∇u + u·∇v_s] + P g` with the planar base
/// read from a stored trajectory.
struct Perturbed<'a> {
    ops: &'a SpectralOps,
    forcing: &'a ForcingField,
    base: &'a Trajectory,
    base_times: Vec<f64>,
    cache: Vec<(f64, Vec<Vec<f64>>)>,
}

impl Perturbed<'_> {
    fn base_physical(&mut self, t: f64) -> Vec<Vec<f64>> {
        if let Some((_, v)) = self.cache.iter().find(|(s, _)| *s == t) {
            return v.clone();
        }
        let (start, w) = quadrature::cubic_weights(&self.base_times, t);
        let g2 = *self.base.grid();
        let mut comps = vec![vec![Complex64::default(); g2.spectral_len()]; 2];
        for (j, wj) in w.iter().enumerate() {
            let snap = self.base.snapshots[start + j].spectral();
            for (c, dst) in comps.iter_mut().enumerate() {
                for (d, s) in dst.iter_mut().zip(&snap[c]) {
                    *d += s * *wj;
                }
            }
        }
        let g3 = *self.ops.grid();
        let phys: Vec<Vec<f64>> = comps
            .iter()
            .map(|c| broadcast_planar(&g3, &crate::fft::inverse(&g2, c)))
            .collect();
        if self.cache.len() >= 3 {
            self.cache.remove(0);
        }
        self.cache.push((t, phys.clone()));
        phys
    }
}

impl Nonlinear for Perturbed<'_> {
    fn eval(&mut self, state: &Spectrum, t: f64) -> Spectrum {
        let b = self.base_physical(t);
        let mut w = self.ops.to_physical(state);
        for (wc, bc) in w.iter_mut().zip(&b) {
            for (x, y) in wc.iter_mut().zip(bc) {
                *x += y;
            }
        }
        let mut out = self.ops.convective(&w, Some(&b));
        if !self.forcing.is_zero() {
            add_into(&mut out, &projected_forcing(self.ops, self.forcing, t));
        }
        out
    }

    fn mean_forcing(&self, t: f64) -> [f64; 3] {
        self.forcing.mean(t)
    }
}

impl Trajectory {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
}

/// `P(−v·∇v + f) + νΔv`, with the advection dealiased.
pub fn nse_rhs(v: &Field, f: &Field, nu: f64) -> Result<Field, FieldError> {
    v.check_compatible(f)?;
    if !v.is_vector() {
        return Err(FieldError::ComponentMismatch {
            expected: v.grid().dim(),
            found: v.ncomp(),
        });
    }
    let ops = SpectralOps::new(v.grid());
    let mut out = ops.convective(&v.physical(), None);
    let mut fs = f.spectral().into_owned();
    ops.project(&mut fs);
    add_into(&mut out, &fs);
    let visc = v.laplacian().scale(nu);
    let mut r = Field::from_spectral(*v.grid(), out)?.add(&visc)?;
    r.set_time(v.time());
    Ok(r)
}

/// One step of the full system from `state` at its time stamp.
pub fn advance(
    state: &Field,
    forcing: &ForcingField,
    nu: f64,
    dt: f64,
    scheme: TimeScheme,
) -> Result<Field, SolverError> {
    if forcing.grid() != state.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let ops = SpectralOps::new(state.grid());
    let stepper = Stepper::new(ops.clone(), nu, dt, scheme);
    let mut rhs = Navier { ops: &ops, forcing };
    let mut init = state.spectral().into_owned();
    ops.truncate(&mut init);
    let next = stepper.step(&init, state.time(), &mut rhs);
    let mut out = Field::from_spectral(*state.grid(), next)?;
    out.set_time(state.time() + dt);
    out.set_divergence_free(true);
    if !out.is_finite() {
        return Err(SolverError::BlowUp(Box::new(Trajectory {
            kind: RunKind::Full,
            grid: *state.grid(),
            nu,
            dt,
            snapshot_stride: 1,
            scheme,
            window: dt,
            measure_factor: 1.0,
            snapshots: vec![state.clone()],
            records: Vec::new(),
            config_hash: String::new(),
            abort: Some(AbortInfo {
                step: 1,
                time: state.time() + dt,
                reason: "non-finite state".into(),
            }),
        })));
    }
    Ok(out)
}

fn config_hash(
    config: &SolverConfig,
    initial: &Field,
    forcing: &ForcingField,
    extra: &str,
) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(serde_json::to_vec(forcing.spec()).expect("forcing serializes"));
    h.update(io::encode(initial));
    h.update(extra.as_bytes());
    hex::encode(h.finalize())
}

struct RecordSpec {
    measure_factor: f64,
    level_every_step: NormLevel,
    forcing_l65: bool,
}

fn make_record(
    state: &Field,
    forcing: &ForcingField,
    t: f64,
    spec: &RecordSpec,
    snapshot: bool,
    sigma: f64,
) -> StepRecord {
    let level = if snapshot {
        NormLevel::Full
    } else {
        spec.level_every_step
    };
    let mut norms =
        norms::report(&state.mean_free(), sigma, level).with_measure_factor(spec.measure_factor);
    norms.time = t;
    let mean = state.mean().value;
    let (forcing_mean, forcing_l2_sq, forcing_l65_sq) = if forcing.is_zero() {
        ([0.0; 3], 0.0, spec.forcing_l65.then_some(0.0))
    } else {
        let f = forcing.field(t).mean_free();
        let l65 = spec
            .forcing_l65
            .then(|| norms::lp_norm(&f, 1.2).expect("valid exponent").powi(2));
        (forcing.mean(t), norms::l2_sq(&f) * spec.measure_factor, l65)
    };
    StepRecord {
        norms,
        mean,
        forcing_mean,
        forcing_l2_sq,
        forcing_l65_sq,
        divergence: state.relative_divergence().unwrap_or(0.0),
    }
}

fn integrate<N: Nonlinear>(
    kind: RunKind,
    config: &SolverConfig,
    initial: &Field,
    forcing: &ForcingField,
    rhs: &mut N,
    ops: &SpectralOps,
    spec: RecordSpec,
    hash: String,
) -> Result<Trajectory, SolverError> {
    let grid = *ops.grid();
    let stepper = Stepper::new(ops.clone(), config.nu, config.dt, config.scheme);
    let mut state = initial.spectral().into_owned();
    ops.truncate(&mut state);
    ops.project(&mut state);
    let to_field = |s: &Spectrum, t: f64| {
        let mut f = Field::from_spectral(grid, s.clone()).expect("state matches grid");
        f.set_time(t);
        f.set_divergence_free(true);
        f
    };
    let mut traj = Trajectory {
        kind,
        grid,
        nu: config.nu,
        dt: config.dt,
        snapshot_stride: config.snapshot_stride,
        scheme: config.scheme,
        window: config.window,
        measure_factor: spec.measure_factor,
        snapshots: Vec::new(),
        records: Vec::new(),
        config_hash: hash,
        abort: None,
    };
    let steps = config.steps();
    let first = to_field(&state, 0.0);
    traj.records
        .push(make_record(&first, forcing, 0.0, &spec, true, config.sigma));
    traj.snapshots.push(first);
    for n in 0..steps {
        let t = config.time(n);
        let next = stepper.step(&state, t, rhs);
        let t1 = config.time(n + 1);
        let finite = next
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if !finite {
            traj.abort = Some(AbortInfo {
                step: n + 1,
                time: t1,
                reason: "non-finite state".into(),
            });
            return Err(SolverError::BlowUp(Box::new(traj)));
        }
        state = next;
        let snapshot = (n + 1) % config.snapshot_stride == 0 || n + 1 == steps;
        let field = to_field(&state, t1);
        traj.records.push(make_record(
            &field,
            forcing,
            t1,
            &spec,
            snapshot,
            config.sigma,
        ));
        if snapshot {
            traj.snapshots.push(field);
        }
    }
    Ok(traj)
}

fn check_forcing(forcing: &ForcingField, grid: &TorusGrid, t_end: f64) -> Result<(), SolverError> {
    if forcing.grid() != grid {
        return Err(FieldError::GridMismatch.into());
    }
    if !forcing.covers(0.0, t_end) {
        return Err(SolverError::Coverage {
            what: "forcing snapshots".into(),
            t0: 0.0,
            t1: t_end,
        });
    }
    Ok(())
}

/// Planar base flow on a two-dimensional grid. Norm diagnostics are
/// reported on the three-dimensional box (integrals times `L`).
pub fn run_2d_base(
    config: &SolverConfig,
    initial: &Field,
    forcing: &ForcingField,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    let grid = config.grid;
    if grid.dim() != 2 {
        return Err(SolverError::Config(
            "the base flow runs on a two-dimensional grid".into(),
        ));
    }
    if !forcing.spec().is_planar() {
        return Err(SolverError::NotPlanar);
    }
    if initial.grid() != &grid || !initial.is_vector() {
        return Err(FieldError::GridMismatch.into());
    }
    check_forcing(forcing, &grid, config.t_end)?;
    let ops = SpectralOps::new(&grid);
    let mut rhs = Navier { ops: &ops, forcing };
    let spec = RecordSpec {
        measure_factor: grid.length(),
        level_every_step: NormLevel::Full,
        forcing_l65: false,
    };
    let hash = config_hash(config, initial, forcing, "base");
    integrate(
        RunKind::Base,
        config,
        initial,
        forcing,
        &mut rhs,
        &ops,
        spec,
        hash,
    )
}

/// Perturbation `u` of a stored planar base flow; `initial` is `u(0)`
/// including its mean.
pub fn run_perturbation(
    config: &SolverConfig,
    base: &Trajectory,
    initial: &Field,
    forcing: &ForcingField,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    let grid = config.grid;
    if grid.dim() != 3 || base.grid.with_dim(3)? != grid || base.kind != RunKind::Base {
        return Err(SolverError::Config(
            "perturbation runs need a 3D grid matching a planar base trajectory".into(),
        ));
    }
    if !base.covers(0.0, config.t_end) {
        return Err(SolverError::Coverage {
            what: "the base trajectory".into(),
            t0: 0.0,
            t1: config.t_end,
        });
    }
    if initial.grid() != &grid || !initial.is_vector() {
        return Err(FieldError::GridMismatch.into());
    }
    check_forcing(forcing, &grid, config.t_end)?;
    let ops = SpectralOps::new(&grid);
    let mut rhs = Perturbed {
        ops: &ops,
        forcing,
        base,
        base_times: base.snapshot_times(),
        cache: Vec::new(),
    };
    let spec = RecordSpec {
        measure_factor: 1.0,
        level_every_step: NormLevel::Spectral,
        forcing_l65: true,
    };
    let hash = config_hash(config, initial, forcing, &base.config_hash);
    integrate(
        RunKind::Perturbation,
        config,
        initial,
        forcing,
        &mut rhs,
        &ops,
        spec,
        hash,
    )
}

/// The full three-dimensional system.
pub fn run_full_3d(
    config: &SolverConfig,
    initial: &Field,
    forcing: &ForcingField,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    let grid = config.grid;
    if grid.dim() != 3 {
        return Err(SolverError::Config(
            "the full system runs on a 3D grid".into(),
        ));
    }
    if initial.grid() != &grid || !initial.is_vector() {
        return Err(FieldError::GridMismatch.into());
    }
    check_forcing(forcing, &grid, config.t_end)?;
    let ops = SpectralOps::new(&grid);
    let mut rhs = Navier { ops: &ops, forcing };
    let spec = RecordSpec {
        measure_factor: 1.0,
        level_every_step: NormLevel::Spectral,
        forcing_l65: false,
    };
    let hash = config_hash(config, initial, forcing, "full");
    integrate(
        RunKind::Full,
        config,
        initial,
        forcing,
        &mut rhs,
        &ops,
        spec,
        hash,
    )
}

/// `mean(t) = mean(0) + ∫₀ᵗ mean_force` at every sample of `times` inside
/// `interval`, by piecewise cubic quadrature.
pub fn mean_ode_integrate(
    times: &[f64],
    mean_forcing: &[[f64; 3]],
    initial: MeanVector,
    interval: (f64, f64),
) -> Result<Vec<MeanVector>, SolverError> {
    let (t0, t1) = interval;
    let gap = || SolverError::Coverage {
        what: "the mean-forcing series".into(),
        t0,
        t1,
    };
    if times.len() != mean_forcing.len() || times.is_empty() {
        return Err(gap());
    }
    let span = (times[times.len() - 1] - times[0]).abs().max(1.0);
    let tol = 1e-9 * span;
    if times[0] > t0 + tol || times[times.len() - 1] < t1 - tol || (initial.time - t0).abs() > tol {
        return Err(gap());
    }
    let cums: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let v: Vec<f64> = mean_forcing.iter().map(|m| m[c]).collect();
            quadrature::cumulative(times, &v, QuadratureRule::Cubic)
        })
        .collect();
    let at = |c: usize, t: f64| quadrature::interpolate(times, &cums[c], t);
    let base: Vec<f64> = (0..3).map(|c| at(c, t0)).collect();
    Ok(times
        .iter()
        .filter(|&&t| t >= t0 - tol && t <= t1 + tol)
        .map(|&t| {
            let mut value = initial.value;
            for (c, v) in value.iter_mut().enumerate() {
                *v += at(c, t) - base[c];
            }
            MeanVector { value, time: t }
        })
        .collect())
}

/// Mean-free pressure with `−Δp = div(v·∇v − f)`.
pub fn recover_pressure(v: &Field, f: &Field, nu: f64) -> Result<Field, FieldError> {
    let _ = nu; // the viscous term is solenoidal and does not enter
    v.check_compatible(f)?;
    let grid = *v.grid();
    let ops = SpectralOps::new(&grid);
    // `convective` returns −P(v·∇v); recover the unprojected divergence directly.
    let phys = v.physical();
    let dim = grid.dim();
    let k = crate::field::effective_wavevectors(&grid);
    let k2 = ops.k2();
    let fs = f.spectral();
    let mut div = vec![Complex64::default(); grid.spectral_len()];
    for a in 0..dim {
        for c in 0..dim {
            let prod: Vec<f64> = phys[a].iter().zip(&phys[c]).map(|(x, y)| x * y).collect();
            let t = crate::fft::forward(&grid, &prod);
            for i in 0..grid.spectral_len() {
                // div(v·∇v) = ∂_c ∂_a (v_a v_c) for solenoidal v.
                div[i] -= k[i * dim + a] * k[i * dim + c] * t[i];
            }
        }
        for i in 0..grid.spectral_len() {
            div[i] -= Complex64::new(0.0, k[i * dim + a]) * fs[a][i];
        }
    }
    let mask = crate::field::dealias_mask(&grid);
    let p: Vec<Complex64> = (0..grid.spectral_len())
        .map(|i| {
            if i == 0 || k2[i] == 0.0 || !mask[i] {
                Complex64::default()
            } else {
                div[i] / k2[i]
            }
        })
        .collect();
    let mut out = Field::from_spectral(grid, vec![p])?;
    out.set_time(v.time());
    Ok(out)
}

/// `(sin x₁ cos x₂, −cos x₁ sin x₂, 0) e^{−2νt}` on the `2π` box.
pub fn taylor_green_exact(grid: &TorusGrid, nu: f64, t: f64) -> Result<Field, FieldError> {
    if (grid.length() - 2.0 * PI).abs() > 1e-12 * 2.0 * PI {
        return Err(FieldError::Invalid(format!(
            "the Taylor-Green solution needs L = 2π, got {}",
            grid.length()
        )));
    }
    let a = (-2.0 * nu * t).exp();
    let mut f = Field::from_fn(*grid, grid.dim(), |x| {
        [
            a * x[0].sin() * x[1].cos(),
            -a * x[0].cos() * x[1].sin(),
            0.0,
        ]
    })?
    .to_spectral();
    f.set_time(t);
    f.set_divergence_free(true);
    Ok(f)
}
