//! Running, checking and reporting one experiment.
//!
//! Artifact layout of an output directory:
//!
//! ```text
//! spec.toml            resolved configuration
//! base/                planar base trajectory
//! perturbation/        perturbation trajectory (if configured)
//! direct/              full 3D trajectory (if configured)
//! inequalities.json    one report per checked inequality
//! budgets.json         constants, budgets and tolerance model
//! windows.csv          per-window summary
//! report.txt           human-readable summary
//! run.json             config hash and wall-clock time
//! FAILED               present only when the run aborted
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::estimates::{
    check_stability_hypotheses, compute_a_constants, compute_b_constants, conditions,
    gronwall_envelope, series::windows, stability_series, verify_decay_2d, verify_l2_stability,
    verify_stability_conclusion, vorticity_cancellation_residual, w1sigma_monitor, Envelope,
    InequalityReport, L2Budget, ReportSet, StabilityBudget, StabilitySeries, Status,
    ToleranceModel, TwoDBudget, W1SigmaMonitor,
};
use crate::forcing::{ForcingField, ForcingSpec};
use crate::norms::{self, fmt_f64};
use crate::solver::{run_2d_base, run_full_3d, run_perturbation, SolverError, Trajectory};

use super::spec::{parse_config, ExperimentSpec};
use super::{ExperimentError, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};

/// Normalised vorticity-cancellation residual allowed at each snapshot.
const VORTICITY_BOUND: f64 = 1e-9;
/// Split-consistency bound reported for direct runs.
const SPLIT_BOUND: f64 = 1e-5;
/// Snapshots sampled for the vorticity check.
const VORTICITY_SAMPLES: usize = 16;

#[derive(Debug, Clone)]
pub struct Runs {
    pub base: Trajectory,
    pub perturbation: Option<Trajectory>,
    pub direct: Option<Trajectory>,
}

impl Runs {
    fn write(&self, out: &Path, config: &str) -> Result<(), ExperimentError> {
        self.base.write_dir(&out.join("base"), Some(config))?;
        if let Some(p) = &self.perturbation {
            p.write_dir(&out.join("perturbation"), Some(config))?;
        }
        if let Some(d) = &self.direct {
            d.write_dir(&out.join("direct"), Some(config))?;
        }
        Ok(())
    }

    fn read(dir: &Path) -> Result<Self, ExperimentError> {
        let optional = |name: &str| -> Result<Option<Trajectory>, ExperimentError> {
            let d = dir.join(name);
            if d.join("summary.json").exists() {
                Ok(Some(Trajectory::read_dir(&d)?))
            } else {
                Ok(None)
            }
        };
        let base_dir = dir.join("base");
        if !base_dir.join("summary.json").exists() {
            return Err(ExperimentError::MissingArtifacts(base_dir));
        }
        Ok(Runs {
            base: Trajectory::read_dir(&base_dir)?,
            perturbation: optional("perturbation")?,
            direct: optional("direct")?,
        })
    }

    /// Records and snapshots up to `t_end`.
    fn truncated(&self, t_end: f64) -> Runs {
        let cut = |t: &Trajectory| {
            let slack = 1e-9 * t.dt;
            let mut out = t.clone();
            out.records.retain(|r| r.time() <= t_end + slack);
            out.snapshots.retain(|s| s.time() <= t_end + slack);
            out
        };
        Runs {
            base: cut(&self.base),
            perturbation: self.perturbation.as_ref().map(cut),
            direct: self.direct.as_ref().map(cut),
        }
    }
}

/// Integrate every configured run. A blown-up trajectory is written to
/// `partial` (when given) before the error is returned.
pub fn simulate(spec: &ExperimentSpec, partial: Option<&Path>) -> Result<Runs, ExperimentError> {
    let keep = |e: SolverError| -> ExperimentError {
        if let (SolverError::BlowUp(t), Some(dir)) = (&e, partial) {
            let _ = t.write_dir(&dir.join("partial"), None);
        }
        e.into()
    };
    let g2 = spec.grid2()?;
    let g3 = spec.grid3()?;
    let base_cfg = spec.solver_config(2)?;
    let v0 = spec.base.initial.resolve(&g2, spec.seed)?;
    let f_base = ForcingField::build(&spec.base.forcing, &g2)?;
    let base = run_2d_base(&base_cfg, &v0, &f_base).map_err(keep)?;
    let (mut perturbation, mut direct) = (None, None);
    if let Some(p) = &spec.perturbation {
        let cfg = spec.solver_config(3)?;
        let u0 = p.initial.resolve(&g3, spec.seed.wrapping_add(1))?;
        let g = ForcingField::build(&p.forcing, &g3)?;
        perturbation = Some(run_perturbation(&cfg, &base, &u0, &g).map_err(keep)?);
        if spec.direct {
            let total = ForcingSpec::Sum {
                parts: vec![spec.base.forcing.clone(), p.forcing.clone()],
            };
            let f = ForcingField::build(&total, &g3)?;
            let w0 = v0.lift_to_3d()?.add(&u0)?;
            direct = Some(run_full_3d(&cfg, &w0, &f).map_err(keep)?);
        }
    }
    Ok(Runs {
        base,
        perturbation,
        direct,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub two_d: TwoDBudget,
    pub monitor: W1SigmaMonitor,
    pub l2: Option<L2Budget>,
    pub stability: Option<StabilityBudget>,
    pub tolerance: ToleranceModel,
}

#[derive(Debug, Clone)]
pub struct Checks {
    pub reports: ReportSet,
    pub budgets: Budgets,
    pub windows_csv: String,
}

/// Evaluate every applicable inequality on the stored runs.
pub fn run_checks(
    spec: &ExperimentSpec,
    runs: &Runs,
    tol: &ToleranceModel,
) -> Result<Checks, ExperimentError> {
    let window = spec.window_length();
    let base = &runs.base;
    let mut reports = ReportSet::new();

    let two_d = compute_a_constants(base, window, None)?;
    reports.extend(verify_decay_2d(base, &two_d, tol)?);
    reports.push(vorticity_report(base)?);
    let (monitor, r) = w1sigma_monitor(base, window, spec.sigma, tol)?;
    reports.push(r);

    let (mut l2, mut stability) = (None, None);
    let mut stab = Vec::new();
    let mut envelopes = Vec::new();
    if let Some(pert) = &runs.perturbation {
        let constants = spec.constants()?;
        let margin = conditions::base_smallness(
            spec.nu,
            window,
            two_d.c_poincare,
            constants.c1,
            constants.c3,
            two_d.sup_window_forcing(),
            two_d.enstrophy0,
        );
        reports.push(
            InequalityReport::scalar(
                "4.11",
                "base forcing and initial enstrophy are small relative to the window",
                margin,
                tol.tol("4.11"),
            )
            .hypothesis(),
        );
        let b = compute_b_constants(pert, &two_d, &constants)?;
        reports.extend(verify_l2_stability(pert, &b, tol)?);
        l2 = Some(b);

        let budget = spec.stability_budget()?;
        stab = stability_series(pert, base, &budget)?;
        let (hyp, reason) = check_stability_hypotheses(&stab, &budget, tol);
        reports.extend(hyp);
        envelopes = stab.iter().map(|s| gronwall_envelope(s, &budget)).collect();
        reports.extend(verify_stability_conclusion(
            &stab,
            &envelopes,
            &budget,
            tol,
            reason.as_deref(),
        ));
        stability = Some(budget);

        if let Some(direct) = &runs.direct {
            reports.push(split_report(base, pert, direct)?);
        }
    }

    let windows_csv = windows_csv(spec, base, &monitor, &stab, &envelopes);
    Ok(Checks {
        reports,
        budgets: Budgets {
            two_d,
            monitor,
            l2,
            stability,
            tolerance: tol.clone(),
        },
        windows_csv,
    })
}

fn vorticity_report(base: &Trajectory) -> Result<InequalityReport, ExperimentError> {
    let n = base.snapshots.len();
    let picks = VORTICITY_SAMPLES.min(n);
    let mut times = Vec::with_capacity(picks);
    let mut margins = Vec::with_capacity(picks);
    for j in 0..picks {
        let idx = if picks > 1 {
            j * (n - 1) / (picks - 1)
        } else {
            0
        };
        let s = &base.snapshots[idx];
        times.push(s.time());
        margins.push(-vorticity_cancellation_residual(s)?);
    }
    Ok(InequalityReport::evaluate(
        "3.7",
        "advection term cancels in the enstrophy balance (normalised residual)",
        times,
        margins,
        VORTICITY_BOUND,
    ))
}

/// `‖v_direct − (v̄ + u)‖` at the common snapshot times.
fn split_report(
    base: &Trajectory,
    pert: &Trajectory,
    direct: &Trajectory,
) -> Result<InequalityReport, ExperimentError> {
    let mut times = Vec::new();
    let mut margins = Vec::new();
    for (p, d) in pert.snapshots.iter().zip(&direct.snapshots) {
        let t = d.time();
        if let Some(b) = base
            .snapshots
            .iter()
            .find(|b| (b.time() - t).abs() <= 1e-9 * base.dt)
        {
            let err = d.sub(&b.lift_to_3d()?.add(p)?)?;
            times.push(t);
            margins.push(-norms::l2_sq(&err).sqrt());
        }
    }
    Ok(InequalityReport::evaluate(
        "split",
        "direct 3D run equals lifted base plus perturbation",
        times,
        margins,
        SPLIT_BOUND,
    )
    .informational())
}

const WINDOW_COLUMNS: &str = "window,t0,t1,energy_end,enstrophy_end,w1sigma_max,x_sq_start,x_sq_end,int_a_sq,int_g_sq,envelope_end,endpoint_bound";

fn windows_csv(
    spec: &ExperimentSpec,
    base: &Trajectory,
    monitor: &W1SigmaMonitor,
    stab: &[StabilitySeries],
    envelopes: &[Envelope],
) -> String {
    let mut out = String::from(WINDOW_COLUMNS);
    out.push('\n');
    for (k, t0, t1) in windows(base.t_end(), spec.window_length()) {
        let energy = base.series_at(|r| r.norms.l2_sq, t1);
        let enstrophy = base.series_at(|r| r.norms.h1_sq - r.norms.l2_sq, t1);
        let mut row = vec![
            k.to_string(),
            fmt_f64(t0),
            fmt_f64(t1),
            fmt_f64(energy),
            fmt_f64(enstrophy),
            monitor
                .window_maxima
                .get(k)
                .map_or(String::new(), |v| fmt_f64(*v)),
        ];
        match (stab.iter().find(|s| s.window_index == k), envelopes.get(k)) {
            (Some(s), Some(e)) => row.extend([
                fmt_f64(s.x0_sq()),
                fmt_f64(s.x_end_sq()),
                fmt_f64(s.total_a_sq()),
                fmt_f64(s.total_g_sq()),
                fmt_f64(*e.linear.last().unwrap_or(&f64::NAN)),
                fmt_f64(e.endpoint_bound),
            ]),
            _ => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Tolerances from the same checks at `dt` and `dt/2` over the first (at
/// most two) windows.
fn halving_tolerance(
    spec: &ExperimentSpec,
    runs: &Runs,
) -> Result<ToleranceModel, ExperimentError> {
    let mut short = spec.clone();
    short.windows = spec.windows.min(2);
    let coarse_runs = runs.truncated(short.t_end());
    let mut fine = short.clone();
    fine.dt = spec.dt / 2.0;
    let fine_runs = simulate(&fine, None)?;
    let floor = ToleranceModel::floor_only(spec.dt);
    let coarse = run_checks(&short, &coarse_runs, &floor)?;
    let fine_checks = run_checks(&fine, &fine_runs, &ToleranceModel::floor_only(fine.dt))?;
    Ok(ToleranceModel::from_halving(
        spec.dt,
        &coarse.reports,
        &fine_checks.reports,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub name: String,
    /// SHA-256 of the resolved `spec.toml`.
    pub config_hash: String,
    pub wall_clock_seconds: f64,
    pub base_steps: usize,
    pub perturbation_steps: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config_hash: String,
    pub wall_clock_seconds: f64,
    pub reports: ReportSet,
    pub summary: Summary,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn write_checks(out: &Path, checks: &Checks) -> Result<Summary, ExperimentError> {
    fs::write(
        out.join("inequalities.json"),
        serde_json::to_string_pretty(&checks.reports.to_json())?,
    )?;
    fs::write(
        out.join("budgets.json"),
        serde_json::to_string_pretty(&checks.budgets)?,
    )?;
    fs::write(out.join("windows.csv"), &checks.windows_csv)?;
    let summary = format_report(&checks.reports);
    fs::write(out.join("report.txt"), &summary.text)?;
    Ok(summary)
}

/// Run, check and write all artifacts to `out`.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<RunArtifacts, ExperimentError> {
    let started = Instant::now();
    fs::create_dir_all(out)?;
    let marker = out.join("FAILED");
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let result = (|| {
        let text = spec.to_toml();
        fs::write(out.join("spec.toml"), &text)?;
        let runs = simulate(spec, Some(out))?;
        runs.write(out, &text)?;
        let tol = if spec.dt_halving {
            halving_tolerance(spec, &runs)?
        } else {
            ToleranceModel::floor_only(spec.dt)
        };
        let checks = run_checks(spec, &runs, &tol)?;
        let summary = write_checks(out, &checks)?;
        let hash = config_hash(&text);
        let wall = started.elapsed().as_secs_f64();
        let info = RunInfo {
            name: spec.name.clone(),
            config_hash: hash.clone(),
            wall_clock_seconds: wall,
            base_steps: runs.base.records.len().saturating_sub(1),
            perturbation_steps: runs
                .perturbation
                .as_ref()
                .map(|p| p.records.len().saturating_sub(1)),
        };
        fs::write(out.join("run.json"), serde_json::to_string_pretty(&info)?)?;
        Ok(RunArtifacts {
            dir: out.to_path_buf(),
            config_hash: hash,
            wall_clock_seconds: wall,
            reports: checks.reports,
            summary,
        })
    })();
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

/// Re-run every check on the trajectories stored in `dir` and rewrite the
/// reports.
pub fn verify(dir: &Path) -> Result<Summary, ExperimentError> {
    let spec_path = dir.join("spec.toml");
    if !spec_path.exists() {
        return Err(ExperimentError::MissingArtifacts(spec_path));
    }
    let spec = parse_config(&fs::read_to_string(&spec_path)?)?;
    let runs = Runs::read(dir)?;
    let budgets = dir.join("budgets.json");
    let tol = if budgets.exists() {
        serde_json::from_str::<Budgets>(&fs::read_to_string(budgets)?)?.tolerance
    } else {
        ToleranceModel::floor_only(spec.dt)
    };
    let checks = run_checks(&spec, &runs, &tol)?;
    write_checks(dir, &checks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub text: String,
    pub exit_code: i32,
}

fn status_label(r: &InequalityReport) -> &'static str {
    match (r.status, r.informational) {
        (Status::Pass, _) => "pass",
        (Status::Vacuous, _) => "vacuous",
        (Status::Unmet, _) => "unmet",
        (Status::Fail, true) => "fail (info)",
        (Status::Fail, false) => "FAIL",
    }
}

/// Summary table; the first line names the first failing inequality.
pub fn format_report(reports: &ReportSet) -> Summary {
    let failed: Vec<&str> = reports.failures().map(|r| r.id.as_str()).collect();
    let count = |s: Status| reports.reports.iter().filter(|r| r.status == s).count();
    let mut text = if failed.is_empty() {
        format!(
            "PASS: {} checked, {} vacuous, {} hypotheses unmet\n",
            reports.reports.len(),
            count(Status::Vacuous),
            count(Status::Unmet)
        )
    } else {
        format!("FAIL: {} ({} failing)\n", failed[0], failed.len())
    };
    let _ = writeln!(
        text,
        "{:<18} {:<12} {:>14} {:>11} {:>11}",
        "id", "status", "worst margin", "tolerance", "time"
    );
    for r in &reports.reports {
        let _ = writeln!(
            text,
            "{:<18} {:<12} {:>14.6e} {:>11.3e} {:>11.5}",
            r.id,
            status_label(r),
            r.worst_margin,
            r.tolerance,
            r.worst_time
        );
        if let Some(note) = &r.note {
            let _ = writeln!(text, "    {note}");
        }
    }
    Summary {
        text,
        exit_code: if failed.is_empty() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        },
    }
}

/// Summarise the reports stored in `dir`.
pub fn emit_report(dir: &Path) -> Result<Summary, ExperimentError> {
    let marker = dir.join("FAILED");
    if marker.exists() {
        return Ok(Summary {
            text: format!("ERROR: {}", fs::read_to_string(marker)?),
            exit_code: EXIT_ERROR,
        });
    }
    let path = dir.join("inequalities.json");
    if !path.exists() {
        return Err(ExperimentError::MissingArtifacts(path));
    }
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let reports = ReportSet::from_json(&value)?;
    if reports.reports.is_empty() {
        return Err(ExperimentError::MissingArtifacts(path));
    }
    Ok(format_report(&reports))
}
