//! Experiment configuration: schema, defaults and resolution.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! name = "stability-smoke"
//! seed = 7
//! nu = 1.0
//! dt = 0.02
//! windows = 3            # number of analysis windows
//! # window = 4.6         # window length; derived from c* when omitted
//!
//! [grid]
//! n = 8                  # points per side; length defaults to 2π
//!
//! [base]
//! initial = { kind = "taylor-green", amplitude = 0.005 }
//! forcing = { kind = "modes", modes = [{ amplitude = [0.005, -0.005, 0.0], wave = [1, 1, 0] }] }
//!
//! [perturbation]
//! initial = { kind = "modes", modes = [{ amplitude = [0.0, 0.01, 0.0], wave = [0, 0, 1] }] }
//! forcing = { kind = "zero" }
//!
//! [stability]
//! gamma_fraction = 0.5   # γ = fraction · γ*
//! alpha = 0.2
//! ```
//!
//! Parsing resolves every default (including the calibrated embedding
//! constant) and records it, so emitting and re-parsing reproduces the spec.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::error::FieldError;
use crate::estimates::{calibrate, StabilityBudget, StabilityConstants};
use crate::field::{random_divfree_field, Field};
use crate::forcing::{ForcingMode, ForcingSpec};
use crate::grid::TorusGrid;
use crate::io;
use crate::norms;
use crate::solver::{taylor_green_exact, SolverConfig, TimeScheme};

use super::ExperimentError;

fn two_pi() -> f64 {
    2.0 * PI
}
fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    norms::DEFAULT_SIGMA
}
fn default_decay() -> f64 {
    1.5
}
fn yes() -> bool {
    true
}
fn default_alpha() -> f64 {
    0.2
}
fn default_samples() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "two_pi")]
    pub length: f64,
    pub n: usize,
}

/// Initial velocity of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    /// Sum of mode patterns (at `t = 0`) plus a constant mean.
    Modes {
        modes: Vec<ForcingMode>,
        #[serde(default)]
        mean: [f64; 3],
    },
    /// Scaled Taylor-Green cell (box length 2π).
    TaylorGreen {
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// Seeded random divergence-free field, optionally rescaled to a given
    /// `‖·‖²_{H¹}` on the three-dimensional box.
    Random {
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h1_sq: Option<f64>,
        #[serde(default)]
        seed_offset: u64,
    },
    Snapshot {
        path: PathBuf,
    },
}

impl InitialSpec {
    pub fn resolve(&self, grid: &TorusGrid, seed: u64) -> Result<Field, ExperimentError> {
        let field = match self {
            InitialSpec::Zero => Field::zero_vector(*grid),
            InitialSpec::Modes { modes, mean } => {
                let mut f = Field::zero_vector(*grid).to_spectral();
                for m in modes {
                    f = f.axpy(m.profile(0.0), &m.pattern(grid)?)?;
                }
                if grid.dim() == 2 && mean[2] != 0.0 {
                    return Err(FieldError::NotTwoDimensional.into());
                }
                f.with_mean(mean)
            }
            InitialSpec::TaylorGreen { amplitude } => {
                let planar = taylor_green_exact(&grid.with_dim(2)?, 0.0, 0.0)?.scale(*amplitude);
                if grid.dim() == 3 {
                    planar.lift_to_3d()?
                } else {
                    planar
                }
            }
            InitialSpec::Random {
                decay,
                h1_sq,
                seed_offset,
            } => {
                let f = random_divfree_field(grid, seed.wrapping_add(*seed_offset), *decay)?
                    .mean_free();
                match h1_sq {
                    Some(target) => {
                        let lift = if grid.dim() == 2 { grid.length() } else { 1.0 };
                        let now = norms::sobolev_norm_sq(&f, 1)? * lift;
                        f.scale((target / now).sqrt())
                    }
                    None => f,
                }
            }
            InitialSpec::Snapshot { path } => {
                let f = io::read_snapshot(path)?;
                if f.grid().dim() == 2 && grid.dim() == 3 {
                    f.lift_to_3d()?
                } else {
                    f
                }
            }
        };
        if field.grid() != grid {
            return Err(FieldError::GridMismatch.into());
        }
        Ok(field.with_time(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_fraction: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    /// Embedding constant; calibrated from a seeded ensemble when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default = "default_samples")]
    pub calibration_samples: usize,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            gamma: None,
            gamma_fraction: None,
            alpha: default_alpha(),
            c_star: None,
            c3: None,
            calibration_samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub nu: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: TimeScheme,
    #[serde(default = "one")]
    pub windows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Estimate discretisation tolerances from a run at `dt/2`.
    #[serde(default = "yes")]
    pub dt_halving: bool,
    /// Also integrate the full three-dimensional system for comparison.
    #[serde(default)]
    pub direct: bool,
    pub grid: GridSpec,
    #[serde(default)]
    pub base: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<RunSpec>,
    #[serde(default)]
    pub stability: StabilitySpec,
}

/// Parse, validate and resolve a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ExperimentError> {
    ExperimentSpec::from_toml(text)?.resolve()
}

impl ExperimentSpec {
    /// Parse without resolving defaults; call [`ExperimentSpec::resolve`] after
    /// applying overrides.
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn grid2(&self) -> Result<TorusGrid, ExperimentError> {
        Ok(TorusGrid::new(self.grid.length, self.grid.n, 2)?)
    }

    pub fn grid3(&self) -> Result<TorusGrid, ExperimentError> {
        Ok(TorusGrid::new(self.grid.length, self.grid.n, 3)?)
    }

    /// Window length (resolved specs always carry one).
    pub fn window_length(&self) -> f64 {
        self.window.unwrap_or(1.0)
    }

    /// Run length: `windows · T`, rounded up to a whole number of steps.
    pub fn t_end(&self) -> f64 {
        let steps = (self.windows as f64 * self.window_length() / self.dt - 1e-6)
            .ceil()
            .max(1.0);
        steps * self.dt
    }

    pub fn solver_config(&self, dim: usize) -> Result<SolverConfig, ExperimentError> {
        let grid = TorusGrid::new(self.grid.length, self.grid.n, dim)?;
        let mut cfg = SolverConfig::new(grid, self.nu, self.dt, self.t_end())
            .with_window(self.window_length().min(self.t_end()))
            .with_stride(self.snapshot_stride)
            .with_scheme(self.scheme);
        cfg.sigma = self.sigma;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn constants(&self) -> Result<StabilityConstants, ExperimentError> {
        let c3 = self
            .stability
            .c3
            .ok_or_else(|| ExperimentError::Invalid("embedding constant not resolved".into()))?;
        Ok(calibrate::constants_from_c3(&self.grid3()?, c3))
    }

    pub fn stability_budget(&self) -> Result<StabilityBudget, ExperimentError> {
        let gamma = self
            .stability
            .gamma
            .ok_or_else(|| ExperimentError::Invalid("γ not resolved".into()))?;
        Ok(StabilityBudget::new(
            self.nu,
            self.window_length(),
            gamma,
            self.stability.alpha,
            self.constants()?,
            self.stability.c_star,
        )?)
    }

    /// Fill and record defaults; refuse budgets outside the admissible range.
    pub fn resolve(mut self) -> Result<Self, ExperimentError> {
        if self.name.trim().is_empty() {
            return Err(ExperimentError::Invalid("name must not be empty".into()));
        }
        if self.windows == 0 {
            return Err(ExperimentError::Invalid(
                "windows must be at least 1".into(),
            ));
        }
        let g3 = self.grid3()?;
        if self.perturbation.is_some() {
            let st = &mut self.stability;
            if st.c3.is_none() {
                let cal = calibrate::calibrate_constants(&g3, st.calibration_samples, self.seed)?;
                st.c3 = Some(cal.constants.c3);
            }
            let constants = calibrate::constants_from_c3(&g3, st.c3.unwrap_or_default());
            let c_star = st
                .c_star
                .unwrap_or_else(|| calibrate::default_c_star(self.nu, &constants));
            if !(c_star > 0.0 && c_star < self.nu * constants.c4) {
                return Err(ExperimentError::Invalid(format!(
                    "c* = {c_star} must lie in (0, νc₄ = {}) for the dissipation budget",
                    self.nu * constants.c4
                )));
            }
            st.c_star = Some(c_star);
            let gamma_star = calibrate::gamma_star(self.nu, &constants, c_star);
            let gamma = match (st.gamma, st.gamma_fraction) {
                (Some(g), _) => g,
                (None, f) => f.unwrap_or(0.5) * gamma_star,
            };
            if gamma > gamma_star {
                return Err(ExperimentError::GammaTooLarge { gamma, gamma_star });
            }
            st.gamma = Some(gamma);
            st.gamma_fraction = None;
            if self.window.is_none() {
                self.window = Some(4.0 * 2f64.ln() / c_star);
            }
        } else if self.window.is_none() {
            self.window = Some(1.0);
        }
        self.solver_config(2)?;
        Ok(self)
    }
}
