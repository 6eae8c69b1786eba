//! Body forces: structured mode lists, stored snapshot sequences, and sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{FieldError, SnapshotError};
use crate::fft;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::io;
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    #[default]
    Sin,
    Cos,
}

/// `amplitude · shape((2π/L) wave · x) · e^{−decay t} cos(omega t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub amplitude: [f64; 3],
    pub wave: [i64; 3],
    #[serde(default)]
    pub shape: Shape,
    #[serde(default)]
    pub decay: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl ForcingMode {
    /// Time-independent mode.
    pub fn steady(amplitude: [f64; 3], wave: [i64; 3], shape: Shape) -> Self {
        ForcingMode {
            amplitude,
            wave,
            shape,
            decay: 0.0,
            omega: 0.0,
            phase: 0.0,
        }
    }

    pub fn profile(&self, t: f64) -> f64 {
        (-self.decay * t).exp() * (self.omega * t + self.phase).cos()
    }

    fn is_planar(&self) -> bool {
        self.amplitude[2] == 0.0 && self.wave[2] == 0
    }

    /// Spatial pattern sampled on `grid` and transformed (exact for resolved modes).
    pub fn pattern(&self, grid: &TorusGrid) -> Result<Field, FieldError> {
        let dim = grid.dim();
        let cut = grid.dealias_cutoff();
        if self.wave[..dim].iter().any(|m| m.abs() > cut) {
            return Err(FieldError::Invalid(format!(
                "forcing wave {:?} exceeds the resolved band |m| <= {cut}",
                self.wave
            )));
        }
        if dim == 2 && !self.is_planar() {
            return Err(FieldError::NotTwoDimensional);
        }
        let s = grid.scale();
        let w = self.wave;
        let a = self.amplitude;
        let shape = self.shape;
        Ok(Field::from_fn(*grid, dim, move |x| {
            let theta = s * (w[0] as f64 * x[0] + w[1] as f64 * x[1] + w[2] as f64 * x[2]);
            let v = match shape {
                Shape::Sin => theta.sin(),
                Shape::Cos => theta.cos(),
            };
            [a[0] * v, a[1] * v, a[2] * v]
        })?
        .to_spectral())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Modes {
        modes: Vec<ForcingMode>,
    },
    /// Snapshot files of a directory, interpolated cubically in time.
    Snapshots {
        directory: PathBuf,
    },
    Sum {
        parts: Vec<ForcingSpec>,
    },
}

impl ForcingSpec {
    pub fn modes(modes: Vec<ForcingMode>) -> Self {
        ForcingSpec::Modes { modes }
    }

    /// Whether the force has zero third component and no `x₃` dependence.
    /// Snapshot sources are checked when built.
    pub fn is_planar(&self) -> bool {
        match self {
            ForcingSpec::Zero | ForcingSpec::Snapshots { .. } => true,
            ForcingSpec::Modes { modes } => modes.iter().all(ForcingMode::is_planar),
            ForcingSpec::Sum { parts } => parts.iter().all(ForcingSpec::is_planar),
        }
    }
}

#[derive(Debug, Clone)]
enum Term {
    Mode {
        pattern: Vec<Vec<Complex64>>,
        mode: ForcingMode,
    },
    Samples {
        times: Vec<f64>,
        values: Vec<Vec<Vec<Complex64>>>,
    },
}

/// A forcing specification resolved on a grid.
#[derive(Debug, Clone)]
pub struct ForcingField {
    grid: TorusGrid,
    spec: ForcingSpec,
    terms: Vec<Term>,
}

impl ForcingField {
    pub fn zero(grid: TorusGrid) -> Self {
        ForcingField {
            grid,
            spec: ForcingSpec::Zero,
            terms: Vec::new(),
        }
    }

    pub fn build(spec: &ForcingSpec, grid: &TorusGrid) -> Result<Self, SnapshotError> {
        let mut out = ForcingField::zero(*grid);
        out.spec = spec.clone();
        out.push(spec)?;
        Ok(out)
    }

    fn push(&mut self, spec: &ForcingSpec) -> Result<(), SnapshotError> {
        match spec {
            ForcingSpec::Zero => {}
            ForcingSpec::Modes { modes } => {
                for m in modes {
                    let pattern = m.pattern(&self.grid)?.into_spectral();
                    self.terms.push(Term::Mode {
                        pattern,
                        mode: m.clone(),
                    });
                }
            }
            ForcingSpec::Snapshots { directory } => {
                let mut times = Vec::new();
                let mut values = Vec::new();
                for path in io::list_snapshots(directory)? {
                    let f = io::read_snapshot(&path)?;
                    let f = self.adapt(f)?;
                    times.push(f.time());
                    values.push(f.dealias().into_spectral());
                }
                if times.is_empty() {
                    return Err(SnapshotError::BadHeader(format!(
                        "no snapshots in {}",
                        directory.display()
                    )));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(SnapshotError::BadHeader(
                        "forcing snapshots must have increasing time stamps".into(),
                    ));
                }
                self.terms.push(Term::Samples { times, values });
            }
            ForcingSpec::Sum { parts } => {
                for p in parts {
                    self.push(p)?;
                }
            }
        }
        Ok(())
    }

    /// Bring a stored snapshot onto this grid (planar snapshots are lifted).
    fn adapt(&self, f: Field) -> Result<Field, FieldError> {
        let g = *f.grid();
        if !f.is_vector() {
            return Err(FieldError::ComponentMismatch {
                expected: g.dim(),
                found: f.ncomp(),
            });
        }
        if g == self.grid {
            return Ok(f);
        }
        if g.dim() == 2 && self.grid.dim() == 3 && g.with_dim(3)? == self.grid {
            let t = f.time();
            return Ok(f.lift_to_3d()?.with_time(t));
        }
        Err(FieldError::GridMismatch)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn spec(&self) -> &ForcingSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Time span on which stored samples are available (unbounded otherwise).
    pub fn coverage(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for t in &self.terms {
            if let Term::Samples { times, .. } = t {
                lo = lo.max(times[0]);
                hi = hi.min(times[times.len() - 1]);
            }
        }
        (lo, hi)
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let (lo, hi) = self.coverage();
        let slack = 1e-9 * (t1 - t0).abs().max(1.0);
        lo <= t0 + slack && hi >= t1 - slack
    }

    /// Spectral coefficients at time `t`.
    pub fn eval(&self, t: f64) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::default(); self.grid.spectral_len()]; self.grid.dim()];
        for term in &self.terms {
            match term {
                Term::Mode { pattern, mode } => {
                    let a = mode.profile(t);
                    for (o, p) in out.iter_mut().zip(pattern) {
                        for (x, y) in o.iter_mut().zip(p) {
                            *x += y * a;
                        }
                    }
                }
                Term::Samples { times, values } => {
                    let (start, w) = quadrature::cubic_weights(times, t);
                    for (j, wj) in w.iter().enumerate() {
                        for (o, p) in out.iter_mut().zip(&values[start + j]) {
                            for (x, y) in o.iter_mut().zip(p) {
                                *x += y * *wj;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn field(&self, t: f64) -> Field {
        let mut f =
            Field::from_spectral(self.grid, self.eval(t)).expect("forcing shape matches grid");
        f.set_time(t);
        f
    }

    /// Box average of the force at time `t`.
    pub fn mean(&self, t: f64) -> [f64; 3] {
        let mut m = [0.0; 3];
        for term in &self.terms {
            match term {
                Term::Mode { pattern, mode } => {
                    let a = mode.profile(t);
                    for (c, p) in pattern.iter().enumerate() {
                        m[c] += a * p[0].re;
                    }
                }
                Term::Samples { times, values } => {
                    let (start, w) = quadrature::cubic_weights(times, t);
                    for (j, wj) in w.iter().enumerate() {
                        for (c, p) in values[start + j].iter().enumerate() {
                            m[c] += wj * p[0].re;
                        }
                    }
                }
            }
        }
        m
    }

    /// Physical values of the force at time `t` (for diagnostics).
    pub fn physical(&self, t: f64) -> Vec<Vec<f64>> {
        self.eval(t)
            .iter()
            .map(|c| fft::inverse(&self.grid, c))
            .collect()
    }
}
