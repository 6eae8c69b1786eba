//! Lebesgue, Sobolev and mixed space-time norms of periodic fields.
//!
//! Squared `H^s` norms are sums of squared `L₂` norms of all derivatives of
//! order `≤ s`, evaluated modewise by Parseval with the same multipliers the
//! derivative operators use. The second-order part counts every ordered pair
//! `(a, b)` of the Hessian, so its symbol is `|k|⁴`. Norms with `p ≠ 2` are
//! quadratures of the trigonometric interpolant on a grid padded to `2N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::fft;
use crate::field::{effective_wavevectors, laplacian_symbol, Field};
use crate::grid::TorusGrid;
use crate::quadrature::{self, QuadratureRule};

/// Default `σ > 3` of the `W¹_σ` diagnostic.
pub const DEFAULT_SIGMA: f64 = 4.0;

/// Norms of one snapshot. Entries that need physical-space quadrature are
/// optional so cheap per-step reports can skip them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub h2_sq: f64,
    pub grad_l2_sq: f64,
    pub grad_l3_sq: Option<f64>,
    pub l6_sq: Option<f64>,
    pub sigma: f64,
    pub w1_sigma: Option<f64>,
}

/// How much of a [`NormReport`] to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormLevel {
    /// Only Parseval-based quantities.
    Spectral,
    /// Also the `L₃`, `L₆` and `W¹_σ` quadratures.
    Full,
}

impl NormReport {
    pub const CSV_COLUMNS: [&'static str; 9] = [
        "t",
        "l2_sq",
        "h1_sq",
        "h2_sq",
        "grad_l2_sq",
        "grad_l3_sq",
        "l6_sq",
        "sigma",
        "w1_sigma",
    ];

    pub fn csv_header() -> String {
        Self::CSV_COLUMNS.join(",")
    }

    /// One CSV row in [`NormReport::CSV_COLUMNS`] order; missing entries are empty.
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        [
            fmt_f64(self.time),
            fmt_f64(self.l2_sq),
            fmt_f64(self.h1_sq),
            fmt_f64(self.h2_sq),
            fmt_f64(self.grad_l2_sq),
            opt(self.grad_l3_sq),
            opt(self.l6_sq),
            fmt_f64(self.sigma),
            opt(self.w1_sigma),
        ]
        .join(",")
    }

    pub fn from_csv_fields(fields: &[&str]) -> Result<Self, FieldError> {
        if fields.len() != Self::CSV_COLUMNS.len() {
            return Err(FieldError::Invalid(format!(
                "norm row has {} fields, expected {}",
                fields.len(),
                Self::CSV_COLUMNS.len()
            )));
        }
        let req = |s: &str| -> Result<f64, FieldError> {
            s.trim()
                .parse()
                .map_err(|_| FieldError::Invalid(format!("bad number '{s}'")))
        };
        let opt = |s: &str| -> Result<Option<f64>, FieldError> {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                req(s).map(Some)
            }
        };
        Ok(NormReport {
            time: req(fields[0])?,
            l2_sq: req(fields[1])?,
            h1_sq: req(fields[2])?,
            h2_sq: req(fields[3])?,
            grad_l2_sq: req(fields[4])?,
            grad_l3_sq: opt(fields[5])?,
            l6_sq: opt(fields[6])?,
            sigma: req(fields[7])?,
            w1_sigma: opt(fields[8])?,
        })
    }

    /// Rescale to a box whose measure is `factor` times larger with the field
    /// constant along the new directions (an `x₃`-invariant lift multiplies
    /// every integral by `L`).
    pub fn with_measure_factor(&self, factor: f64) -> NormReport {
        NormReport {
            time: self.time,
            l2_sq: self.l2_sq * factor,
            h1_sq: self.h1_sq * factor,
            h2_sq: self.h2_sq * factor,
            grad_l2_sq: self.grad_l2_sq * factor,
            grad_l3_sq: self.grad_l3_sq.map(|v| v * factor.powf(2.0 / 3.0)),
            l6_sq: self.l6_sq.map(|v| v * factor.powf(1.0 / 3.0)),
            sigma: self.sigma,
            w1_sigma: self.w1_sigma.map(|v| v * factor.powf(1.0 / self.sigma)),
        }
    }
}

/// Shortest round-trip decimal form, so CSV output is reproducible bit for bit.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// A time-ordered series of norm reports over an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryNorms {
    pub reports: Vec<NormReport>,
    pub interval: (f64, f64),
    pub rule: QuadratureRule,
}

impl TrajectoryNorms {
    pub fn new(reports: Vec<NormReport>, rule: QuadratureRule) -> Result<Self, FieldError> {
        if reports.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(FieldError::Invalid(
                "norm reports must be strictly increasing in time".into(),
            ));
        }
        let interval = match (reports.first(), reports.last()) {
            (Some(a), Some(b)) => (a.time, b.time),
            _ => (0.0, 0.0),
        };
        Ok(TrajectoryNorms {
            reports,
            interval,
            rule,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.time).collect()
    }

    pub fn series<F: Fn(&NormReport) -> f64>(&self, f: F) -> Vec<f64> {
        self.reports.iter().map(f).collect()
    }
}

/// `∫_Ω |f|²` by Parseval over all components.
pub fn l2_sq(field: &Field) -> f64 {
    weighted_sum(field, |_| 1.0)
}

fn weighted_sum<W: Fn(usize) -> f64>(field: &Field, weight: W) -> f64 {
    let g = field.grid();
    let spec = field.spectral();
    let mut acc = 0.0;
    for i in 0..g.spectral_len() {
        let w = weight(i);
        if w == 0.0 {
            continue;
        }
        let amp: f64 = spec.iter().map(|c| c[i].norm_sqr()).sum();
        acc += g.hermitian_weight(i) * w * amp;
    }
    acc * g.volume()
}

/// `‖∇f‖²_{L₂} = Σ_a ‖∂_a f‖²`.
pub fn grad_l2_sq(field: &Field) -> f64 {
    let g = field.grid();
    let k = effective_wavevectors(g);
    let dim = g.dim();
    weighted_sum(field, |i| {
        k[i * dim..(i + 1) * dim].iter().map(|x| x * x).sum()
    })
}

/// `Σ_{a,b} ‖∂_a ∂_b f‖²` (equal to `‖Δf‖²` away from Nyquist modes).
pub fn hessian_l2_sq(field: &Field) -> f64 {
    let g = field.grid();
    let k = effective_wavevectors(g);
    let s = g.scale();
    let dim = g.dim();
    weighted_sum(field, |i| {
        let m = g.spectral_modes(i);
        let kv = &k[i * dim..(i + 1) * dim];
        let mut w = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                w += if a == b {
                    (s * m[a] as f64).powi(4)
                } else {
                    kv[a] * kv[a] * kv[b] * kv[b]
                };
            }
        }
        w
    })
}

pub fn sobolev_norm_sq(field: &Field, s: u32) -> Result<f64, FieldError> {
    match s {
        0 => Ok(l2_sq(field)),
        1 => Ok(l2_sq(field) + grad_l2_sq(field)),
        2 => Ok(l2_sq(field) + grad_l2_sq(field) + hessian_l2_sq(field)),
        _ => Err(FieldError::BadSobolevOrder(s)),
    }
}

fn padded_grid(grid: &TorusGrid) -> TorusGrid {
    grid.with_n(2 * grid.n())
        .expect("doubling keeps the grid valid")
}

/// `(∫_Ω |w|^p)^{1/p}` where `|w|` is the Euclidean norm of the listed
/// spectral components at each point.
fn pointwise_lp(grid: &TorusGrid, comps: &[Vec<Complex64>], p: f64) -> f64 {
    let fine = padded_grid(grid);
    let mut mag2 = vec![0.0; fine.physical_len()];
    for c in comps {
        let vals = fft::inverse(&fine, &fft::pad(grid, c, &fine));
        for (m, v) in mag2.iter_mut().zip(&vals) {
            *m += v * v;
        }
    }
    if p.is_infinite() {
        return mag2.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    }
    let cell = fine.volume() / fine.physical_len() as f64;
    let sum: f64 = if p == 2.0 {
        mag2.iter().sum()
    } else {
        mag2.iter().map(|m| m.powf(p / 2.0)).sum()
    };
    (sum * cell).powf(1.0 / p)
}

fn check_exponent(p: f64) -> Result<(), FieldError> {
    if p.is_nan() || p < 1.0 {
        Err(FieldError::BadExponent(p))
    } else {
        Ok(())
    }
}

/// `‖f‖_{L_p(Ω)}`, `p ∈ [1, ∞]`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64, FieldError> {
    check_exponent(p)?;
    if p == 2.0 {
        return Ok(l2_sq(field).sqrt());
    }
    Ok(pointwise_lp(field.grid(), &field.spectral(), p))
}

fn gradient_components(field: &Field) -> Vec<Vec<Complex64>> {
    let g = field.grid();
    let k = effective_wavevectors(g);
    let dim = g.dim();
    let spec = field.spectral();
    let mut out = Vec::with_capacity(spec.len() * dim);
    for c in spec.iter() {
        for a in 0..dim {
            out.push(
                c.iter()
                    .enumerate()
                    .map(|(i, z)| z * Complex64::new(0.0, k[i * dim + a]))
                    .collect(),
            );
        }
    }
    out
}

fn hessian_components(field: &Field) -> Vec<Vec<Complex64>> {
    let g = *field.grid();
    let dim = g.dim();
    let mut out = Vec::new();
    for c in 0..field.ncomp() {
        let comp = field.component(c);
        for a in 0..dim {
            for b in 0..dim {
                let d = if a == b {
                    comp.derivative(a, 2)
                } else {
                    comp.derivative(a, 1).and_then(|f| f.derivative(b, 1))
                }
                .expect("axes in range");
                out.push(d.into_spectral().remove(0));
            }
        }
    }
    out
}

/// `‖∇f‖_{L_p}` with the Frobenius norm of the gradient at each point.
pub fn gradient_lp_norm(field: &Field, p: f64) -> Result<f64, FieldError> {
    check_exponent(p)?;
    Ok(pointwise_lp(field.grid(), &gradient_components(field), p))
}

/// `‖D²f‖_{L_p}` with the Frobenius norm of the Hessian at each point.
pub fn hessian_lp_norm(field: &Field, p: f64) -> Result<f64, FieldError> {
    check_exponent(p)?;
    if p == 2.0 {
        return Ok(hessian_l2_sq(field).sqrt());
    }
    Ok(pointwise_lp(field.grid(), &hessian_components(field), p))
}

/// `‖f‖_{W¹_σ} = ‖f‖_{L_σ} + ‖∇f‖_{L_σ}`.
pub fn w1_sigma(field: &Field, sigma: f64) -> Result<f64, FieldError> {
    Ok(lp_norm(field, sigma)? + gradient_lp_norm(field, sigma)?)
}

pub fn report(field: &Field, sigma: f64, level: NormLevel) -> NormReport {
    let l2 = l2_sq(field);
    let grad = grad_l2_sq(field);
    let hess = hessian_l2_sq(field);
    let (grad_l3_sq, l6_sq, w1) = match level {
        NormLevel::Spectral => (None, None, None),
        NormLevel::Full => (
            Some(
                gradient_lp_norm(field, 3.0)
                    .expect("valid exponent")
                    .powi(2),
            ),
            Some(lp_norm(field, 6.0).expect("valid exponent").powi(2)),
            Some(w1_sigma(field, sigma).expect("valid exponent")),
        ),
    };
    NormReport {
        time: field.time(),
        l2_sq: l2,
        h1_sq: l2 + grad,
        h2_sq: l2 + grad + hess,
        grad_l2_sq: grad,
        grad_l3_sq,
        l6_sq,
        sigma,
        w1_sigma: w1,
    }
}

/// `(∫_{t₀}^{t₁} g(t)^{p₂} dt)^{1/p₂}` for a series of spatial norms `g`.
/// Interval ends between samples use linear interpolation of the running
/// integral.
pub fn mixed_norm_from_series(
    times: &[f64],
    spatial: &[f64],
    p2: f64,
    interval: (f64, f64),
    rule: QuadratureRule,
) -> Result<f64, FieldError> {
    check_exponent(p2)?;
    let (a, b) = interval;
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(FieldError::Invalid("empty trajectory".into()));
    };
    let slack = 1e-9 * (last - first).abs().max(1.0);
    if a < first - slack || b > last + slack || b < a {
        return Err(FieldError::Invalid(format!(
            "interval ({a}, {b}) outside trajectory span ({first}, {last})"
        )));
    }
    let integrand: Vec<f64> = spatial.iter().map(|g| g.powf(p2)).collect();
    let cum = quadrature::cumulative(times, &integrand, rule);
    let total = quadrature::interpolate_linear(times, &cum, b)
        - quadrature::interpolate_linear(times, &cum, a);
    Ok(total.max(0.0).powf(1.0 / p2))
}

/// `‖u‖_{L_{p₂}(t₀,t₁; L_{p₁}(Ω))}` over stored snapshots (trapezoid in time).
pub fn mixed_norm(
    snapshots: &[Field],
    p1: f64,
    p2: f64,
    interval: (f64, f64),
) -> Result<f64, FieldError> {
    check_exponent(p1)?;
    let times: Vec<f64> = snapshots.iter().map(|f| f.time()).collect();
    let spatial = snapshots
        .iter()
        .map(|f| lp_norm(f, p1))
        .collect::<Result<Vec<_>, _>>()?;
    mixed_norm_from_series(&times, &spatial, p2, interval, QuadratureRule::Trapezoid)
}

/// `‖D²u‖ + ‖∂_t u‖ + ‖u‖` in `L_{p₂}(L_{p₁})`, with `∂_t u` from
/// second-order differences of the snapshots (one-sided at the ends).
pub fn w21_norm(
    snapshots: &[Field],
    p1: f64,
    p2: f64,
    interval: (f64, f64),
) -> Result<f64, FieldError> {
    check_exponent(p1)?;
    let (a, b) = interval;
    let inside: Vec<&Field> = snapshots
        .iter()
        .filter(|f| f.time() >= a - 1e-12 && f.time() <= b + 1e-12)
        .collect();
    if inside.len() < 3 {
        return Err(FieldError::Invalid(format!(
            "W^{{2,1}} norm needs at least 3 snapshots in the interval, found {}",
            inside.len()
        )));
    }
    let times: Vec<f64> = inside.iter().map(|f| f.time()).collect();
    let n = inside.len();
    let mut d2 = Vec::with_capacity(n);
    let mut dt = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        d2.push(hessian_lp_norm(inside[i], p1)?);
        u.push(lp_norm(inside[i], p1)?);
        let deriv = time_derivative(&inside, &times, i)?;
        dt.push(lp_norm(&deriv, p1)?);
    }
    let span = (times[0], times[n - 1]);
    let rule = QuadratureRule::Trapezoid;
    Ok(mixed_norm_from_series(&times, &d2, p2, span, rule)?
        + mixed_norm_from_series(&times, &dt, p2, span, rule)?
        + mixed_norm_from_series(&times, &u, p2, span, rule)?)
}

fn time_derivative(fields: &[&Field], times: &[f64], i: usize) -> Result<Field, FieldError> {
    let n = fields.len();
    // Three-point Lagrange derivative on possibly uneven spacing.
    let (j0, j1, j2) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let (t0, t1, t2) = (times[j0], times[j1], times[j2]);
    let t = times[i];
    let w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    let w1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    let w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    fields[j0]
        .scale(w0)
        .axpy(w1, fields[j1])?
        .axpy(w2, fields[j2])
}

/// Gradient-to-`H¹` and gradient-to-`L₂` ratios of a mean-free field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareRatio {
    /// `‖∇ū‖² / ‖ū‖²_{H¹}`, at least `κ²/(1+κ²)`.
    pub grad_over_h1: f64,
    /// `‖∇ū‖² / ‖ū‖²_{L₂}`, at least `κ²`.
    pub grad_over_l2: f64,
}

fn require_mean_free_nonzero(field: &Field) -> Result<f64, FieldError> {
    let l2 = l2_sq(field);
    if l2 == 0.0 {
        return Err(FieldError::ZeroField);
    }
    let mean = field.mean().norm();
    let rms = (l2 / field.grid().volume()).sqrt();
    if mean > 1e-12 * rms.max(f64::MIN_POSITIVE) {
        return Err(FieldError::NotMeanFree(mean));
    }
    Ok(l2)
}

pub fn poincare_ratio(field: &Field) -> Result<PoincareRatio, FieldError> {
    let l2 = require_mean_free_nonzero(field)?;
    let grad = grad_l2_sq(field);
    Ok(PoincareRatio {
        grad_over_h1: grad / (l2 + grad),
        grad_over_l2: grad / l2,
    })
}

/// Sharp torus constant `κ²/(1+κ²)`, `κ = 2π/L`, of `c ‖ū‖²_{H¹} ≤ ‖∇ū‖²`.
pub fn poincare_constant(grid: &TorusGrid) -> f64 {
    let k2 = grid.scale().powi(2);
    k2 / (1.0 + k2)
}

/// Sharp torus constant `(κ²+κ⁴)/(1+κ²+κ⁴)` of `c ‖ū‖²_{H²} ≤ ‖∇ū‖² + ‖D²ū‖²`.
pub fn dissipation_constant(grid: &TorusGrid) -> f64 {
    let k2 = grid.scale().powi(2);
    (k2 + k2 * k2) / (1.0 + k2 + k2 * k2)
}

/// `‖ū‖²_{L₆} / ‖ū‖²_{H¹}`, an empirical probe of the embedding constant.
pub fn embedding_ratio_l6_h1(field: &Field) -> Result<f64, FieldError> {
    require_mean_free_nonzero(field)?;
    let h1 = sobolev_norm_sq(field, 1)?;
    Ok(lp_norm(field, 6.0)?.powi(2) / h1)
}

/// Smallest `|k|²` among the occupied modes, for diagnostics.
pub fn lowest_occupied_k2(field: &Field) -> Option<f64> {
    let k2 = laplacian_symbol(field.grid());
    let spec = field.spectral();
    (1..field.grid().spectral_len())
        .filter(|&i| spec.iter().any(|c| c[i].norm() > 0.0))
        .map(|i| k2[i])
        .min_by(|a, b| a.total_cmp(b))
}
