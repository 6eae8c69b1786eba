//! Parameter sweeps over γ, the window length and the perturbation forcing
//! amplitude, one independent experiment per grid point.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimates::gamma_star;
use crate::forcing::ForcingSpec;

use super::run::run_experiment;
use super::spec::ExperimentSpec;
use super::{ExperimentError, EXIT_ERROR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Values of `γ/γ*`.
    pub gamma_fractions: Vec<f64>,
    /// Window lengths; empty keeps the spec's window.
    pub windows: Vec<f64>,
    /// Multipliers of the perturbation forcing amplitude.
    pub forcing_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub label: String,
    pub dir: PathBuf,
    pub gamma: f64,
    pub window: f64,
    pub forcing_scale: f64,
    pub exit_code: i32,
    pub first_line: String,
}

fn scale_forcing(spec: &mut ForcingSpec, s: f64) {
    match spec {
        ForcingSpec::Modes { modes } => {
            for m in modes {
                for a in &mut m.amplitude {
                    *a *= s;
                }
            }
        }
        ForcingSpec::Sum { parts } => parts.iter_mut().for_each(|p| scale_forcing(p, s)),
        ForcingSpec::Zero | ForcingSpec::Snapshots { .. } => {}
    }
}

fn member_spec(
    spec: &ExperimentSpec,
    fraction: f64,
    window: Option<f64>,
    scale: f64,
) -> Result<ExperimentSpec, ExperimentError> {
    let mut m = spec.clone();
    let constants = spec.constants()?;
    let c_star = spec
        .stability
        .c_star
        .ok_or_else(|| ExperimentError::Invalid("c* not resolved".into()))?;
    m.stability.gamma = Some(fraction * gamma_star(spec.nu, &constants, c_star));
    if let Some(w) = window {
        m.window = Some(w);
    }
    if let Some(p) = &mut m.perturbation {
        scale_forcing(&mut p.forcing, scale);
    }
    m.name = format!("{}-g{fraction}-T{}-s{scale}", spec.name, m.window_length());
    m.resolve()
}

/// Run every grid point in a pool of `threads` workers under `out/<label>`,
/// and write `out/sweep.csv`.
pub fn sweep(
    spec: &ExperimentSpec,
    grid: &SweepGrid,
    out: &Path,
    threads: usize,
) -> Result<Vec<SweepMember>, ExperimentError> {
    if spec.perturbation.is_none() {
        return Err(ExperimentError::Invalid(
            "a sweep needs a perturbation run".into(),
        ));
    }
    let windows: Vec<Option<f64>> = if grid.windows.is_empty() {
        vec![None]
    } else {
        grid.windows.iter().copied().map(Some).collect()
    };
    let mut specs = Vec::new();
    for &f in &grid.gamma_fractions {
        for &w in &windows {
            for &s in &grid.forcing_scales {
                specs.push((member_spec(spec, f, w, s)?, s));
            }
        }
    }
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let members: Vec<SweepMember> = pool.install(|| {
        specs
            .par_iter()
            .map(|(m, s)| {
                let dir = out.join(&m.name);
                let (exit_code, first_line) = match run_experiment(m, &dir) {
                    Ok(a) => (
                        a.summary.exit_code,
                        a.summary.text.lines().next().unwrap_or("").to_string(),
                    ),
                    Err(e) => (EXIT_ERROR, format!("ERROR: {e}")),
                };
                SweepMember {
                    label: m.name.clone(),
                    dir,
                    gamma: m.stability.gamma.unwrap_or(f64::NAN),
                    window: m.window_length(),
                    forcing_scale: *s,
                    exit_code,
                    first_line,
                }
            })
            .collect()
    });
    let mut csv = String::from("label,gamma,window,forcing_scale,exit_code,summary\n");
    for m in &members {
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{},\"{}\"",
            m.label,
            m.gamma,
            m.window,
            m.forcing_scale,
            m.exit_code,
            m.first_line.replace('"', "'")
        );
    }
    fs::write(out.join("sweep.csv"), csv)?;
    Ok(members)
}
