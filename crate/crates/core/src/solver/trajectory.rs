//! Stored runs: snapshots, per-step diagnostics and their on-disk layout.
//!
//! A trajectory directory contains
//!
//! * `config.toml`: copy of the configuration that produced the run (if any),
//! * `snap_NNNNNN.nsf`: one snapshot per stride (see [`crate::io`]),
//! * `diagnostics.csv`: one row per time step, columns [`StepRecord::CSV_COLUMNS`],
//! * `summary.json`: run metadata ([`TrajectorySummary`]).

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{FieldError, SnapshotError};
use crate::field::{Field, MeanVector};
use crate::grid::TorusGrid;
use crate::io;
use crate::norms::{fmt_f64, NormReport, TrajectoryNorms};
use crate::quadrature::{self, QuadratureRule};

use super::stepper::TimeScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Base,
    Perturbation,
    Full,
}

/// Scalar diagnostics of one time level. Norms describe the mean-free part
/// of the velocity; planar runs report them on the three-dimensional box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub norms: NormReport,
    pub mean: [f64; 3],
    pub forcing_mean: [f64; 3],
    /// `‖f̄‖²_{L₂}` of the mean-free force.
    pub forcing_l2_sq: f64,
    /// `‖f̄‖²_{L_{6/5}}`, evaluated for perturbation runs only.
    pub forcing_l65_sq: Option<f64>,
    pub divergence: f64,
}

impl StepRecord {
    pub const CSV_COLUMNS: [&'static str; 18] = [
        "t",
        "l2_sq",
        "h1_sq",
        "h2_sq",
        "grad_l2_sq",
        "grad_l3_sq",
        "l6_sq",
        "sigma",
        "w1_sigma",
        "mean_1",
        "mean_2",
        "mean_3",
        "forcing_mean_1",
        "forcing_mean_2",
        "forcing_mean_3",
        "forcing_l2_sq",
        "forcing_l65_sq",
        "divergence",
    ];

    pub fn time(&self) -> f64 {
        self.norms.time
    }

    pub fn csv_header() -> String {
        Self::CSV_COLUMNS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = self.norms.to_csv_row();
        for v in self.mean.iter().chain(&self.forcing_mean) {
            row.push(',');
            row.push_str(&fmt_f64(*v));
        }
        row.push(',');
        row.push_str(&fmt_f64(self.forcing_l2_sq));
        row.push(',');
        row.push_str(&self.forcing_l65_sq.map(fmt_f64).unwrap_or_default());
        row.push(',');
        row.push_str(&fmt_f64(self.divergence));
        row
    }

    pub fn from_csv_row(line: &str) -> Result<Self, FieldError> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != Self::CSV_COLUMNS.len() {
            return Err(FieldError::Invalid(format!(
                "diagnostics row has {} fields",
                f.len()
            )));
        }
        let num = |s: &str| -> Result<f64, FieldError> {
            s.parse()
                .map_err(|_| FieldError::Invalid(format!("bad number '{s}'")))
        };
        let norms = NormReport::from_csv_fields(&f[..9])?;
        Ok(StepRecord {
            norms,
            mean: [num(f[9])?, num(f[10])?, num(f[11])?],
            forcing_mean: [num(f[12])?, num(f[13])?, num(f[14])?],
            forcing_l2_sq: num(f[15])?,
            forcing_l65_sq: if f[16].is_empty() {
                None
            } else {
                Some(num(f[16])?)
            },
            divergence: num(f[17])?,
        })
    }
}

/// Blow-up or abort information attached to a partial run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub kind: RunKind,
    pub grid: TorusGrid,
    pub nu: f64,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub scheme: TimeScheme,
    pub window: f64,
    pub measure_factor: f64,
    pub config_hash: String,
    pub final_norms: Option<NormReport>,
    pub abort: Option<AbortInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: RunKind,
    pub grid: TorusGrid,
    pub nu: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub scheme: TimeScheme,
    /// Window length of the step-by-step analysis.
    pub window: f64,
    /// Factor converting the grid's integrals to the three-dimensional box.
    pub measure_factor: f64,
    /// Full fields (mean included) every `snapshot_stride` steps and at the end.
    pub snapshots: Vec<Field>,
    /// One record per time level, starting at `t = 0`.
    pub records: Vec<StepRecord>,
    pub config_hash: String,
    pub abort: Option<AbortInfo>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(StepRecord::time).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.records.last().map(StepRecord::time).unwrap_or(0.0)
    }

    pub fn means(&self) -> Vec<MeanVector> {
        self.records
            .iter()
            .map(|r| MeanVector {
                value: r.mean,
                time: r.time(),
            })
            .collect()
    }

    pub fn norms(&self) -> TrajectoryNorms {
        TrajectoryNorms::new(
            self.records.iter().map(|r| r.norms).collect(),
            QuadratureRule::Cubic,
        )
        .expect("records are time ordered")
    }

    /// Scalar series sampled at the record times.
    pub fn series<F: Fn(&StepRecord) -> f64>(&self, f: F) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// Cubic interpolation of a record series at time `t`.
    pub fn series_at<F: Fn(&StepRecord) -> f64>(&self, f: F, t: f64) -> f64 {
        quadrature::interpolate(&self.times(), &self.series(f), t)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    /// Snapshot at `t`, cubically interpolated between stored ones.
    pub fn snapshot_at(&self, t: f64) -> Field {
        let (start, w) = quadrature::cubic_weights(&self.snapshot_times(), t);
        let mut f = self.snapshots[start].scale(w[0]);
        for (j, wj) in w.iter().enumerate().skip(1) {
            f = f
                .axpy(*wj, &self.snapshots[start + j])
                .expect("snapshots share a grid");
        }
        f.set_time(t);
        f.set_divergence_free(true);
        f
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let times = self.snapshot_times();
        let slack = 1e-9 * self.dt.max(1e-300);
        match (times.first(), times.last()) {
            (Some(&a), Some(&b)) => a <= t0 + slack && b >= t1 - slack,
            _ => false,
        }
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = StepRecord::csv_header();
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            kind: self.kind,
            grid: self.grid,
            nu: self.nu,
            dt: self.dt,
            steps: self.records.len().saturating_sub(1),
            snapshot_stride: self.snapshot_stride,
            scheme: self.scheme,
            window: self.window,
            measure_factor: self.measure_factor,
            config_hash: self.config_hash.clone(),
            final_norms: self.records.last().map(|r| r.norms),
            abort: self.abort.clone(),
        }
    }

    pub fn write_dir(&self, dir: &Path, config_text: Option<&str>) -> Result<(), SnapshotError> {
        fs::create_dir_all(dir)?;
        if let Some(text) = config_text {
            fs::write(dir.join("config.toml"), text)?;
        }
        for (i, s) in self.snapshots.iter().enumerate() {
            io::write_snapshot(&dir.join(io::snapshot_name(i)), s)?;
        }
        fs::write(dir.join("diagnostics.csv"), self.diagnostics_csv())?;
        let summary = serde_json::to_string_pretty(&self.summary())
            .map_err(|e| SnapshotError::BadHeader(e.to_string()))?;
        fs::write(dir.join("summary.json"), summary)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Trajectory, SnapshotError> {
        let summary: TrajectorySummary =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)
                .map_err(|e| SnapshotError::BadHeader(format!("summary.json: {e}")))?;
        let csv = fs::read_to_string(dir.join("diagnostics.csv"))?;
        let mut lines = csv.lines();
        if lines.next() != Some(StepRecord::csv_header().as_str()) {
            return Err(SnapshotError::BadHeader("diagnostics.csv header".into()));
        }
        let records = lines
            .filter(|l| !l.is_empty())
            .map(StepRecord::from_csv_row)
            .collect::<Result<Vec<_>, _>>()?;
        let snapshots = io::list_snapshots(dir)?
            .iter()
            .map(|p| io::read_snapshot(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory {
            kind: summary.kind,
            grid: summary.grid,
            nu: summary.nu,
            dt: summary.dt,
            snapshot_stride: summary.snapshot_stride,
            scheme: summary.scheme,
            window: summary.window,
            measure_factor: summary.measure_factor,
            snapshots,
            records,
            config_hash: summary.config_hash,
            abort: summary.abort,
        })
    }
}
