//! `H¹` stability of the perturbation: window series, hypotheses, the
//! Grönwall envelope and the conclusion `‖ū‖²_{H¹} ≤ γ`.
//!
//! With `X² = ‖ū‖²_{H¹}`, `A² = (c₅/ν)‖∇v̄‖²_{L₃}` and
//! `G² = (c₅/ν)(‖∇v̄‖²_{L₃}|∫₀ᵗ⨍g + ⨍u(0)|² + ‖ḡ‖²)`, the energy estimate
//! `dX²/dt ≤ −X²(νc₄ − c₅X⁴/ν³) + A²X² + G²` reduces, while `X² ≤ γ*`, to
//! the linear `dX²/dt ≤ (A² − c*/2)X² + G²`.

use serde::{Deserialize, Serialize};

use crate::solver::{RunKind, Trajectory};

use super::calibrate::{self, StabilityConstants};
use super::conditions;
use super::l2_stability::{mean_drift_sq, require_perturbation};
use super::report::{InequalityReport, ToleranceModel};
use super::series::{windows, Series};
use super::EstimateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBudget {
    pub nu: f64,
    pub window: f64,
    pub gamma: f64,
    pub gamma_star: f64,
    pub c_star: f64,
    pub alpha: f64,
    pub constants: StabilityConstants,
}

impl StabilityBudget {
    /// `c_star` defaults to `0.9 νc₄`; `γ*` follows from the constants.
    pub fn new(
        nu: f64,
        window: f64,
        gamma: f64,
        alpha: f64,
        constants: StabilityConstants,
        c_star: Option<f64>,
    ) -> Result<Self, EstimateError> {
        let c_star = c_star.unwrap_or_else(|| calibrate::default_c_star(nu, &constants));
        if !(c_star > 0.0 && c_star < nu * constants.c4) {
            return Err(EstimateError::BadBudget(format!(
                "c* = {c_star} must lie in (0, νc₄ = {})",
                nu * constants.c4
            )));
        }
        if !(gamma > 0.0 && alpha > 0.0 && window > 0.0) {
            return Err(EstimateError::BadBudget(
                "γ, α and T must be positive".into(),
            ));
        }
        let gamma_star = calibrate::gamma_star(nu, &constants, c_star);
        if gamma > gamma_star {
            return Err(EstimateError::GammaTooLarge { gamma, gamma_star });
        }
        Ok(StabilityBudget {
            nu,
            window,
            gamma,
            gamma_star,
            c_star,
            alpha,
            constants,
        })
    }
}

/// Quantities of the energy estimate over one window `[kT, (k+1)T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySeries {
    pub window_index: usize,
    pub t0: f64,
    pub t1: f64,
    pub times: Vec<f64>,
    pub x_sq: Vec<f64>,
    pub y_sq: Vec<f64>,
    pub a_sq: Vec<f64>,
    pub g_sq: Vec<f64>,
    /// `e^{−∫_{kT}^t A²} X²`.
    pub z_sq: Vec<f64>,
    /// `∫_{kT}^t A²`.
    pub int_a_sq: Vec<f64>,
    /// `∫_{kT}^t G²`.
    pub int_g_sq: Vec<f64>,
}

impl StabilitySeries {
    pub fn total_a_sq(&self) -> f64 {
        *self.int_a_sq.last().unwrap_or(&0.0)
    }

    pub fn total_g_sq(&self) -> f64 {
        *self.int_g_sq.last().unwrap_or(&0.0)
    }

    pub fn x0_sq(&self) -> f64 {
        self.x_sq[0]
    }

    pub fn x_end_sq(&self) -> f64 {
        *self.x_sq.last().unwrap_or(&f64::NAN)
    }

    fn at(&self, values: &[f64], t: f64) -> f64 {
        crate::quadrature::interpolate(&self.times, values, t)
    }
}

/// One series per full window of the perturbation run. The base
/// diagnostics are interpolated at the perturbation's record times.
pub fn stability_series(
    pert: &Trajectory,
    base: &Trajectory,
    budget: &StabilityBudget,
) -> Result<Vec<StabilitySeries>, EstimateError> {
    require_perturbation(pert)?;
    if base.kind != RunKind::Base {
        return Err(EstimateError::WrongRun("a planar base trajectory".into()));
    }
    let times = pert.times();
    let base_times = base.times();
    let grad_l3: Vec<f64> = base
        .records
        .iter()
        .map(|r| {
            r.norms
                .grad_l3_sq
                .ok_or_else(|| EstimateError::MissingSeries("base grad_l3_sq".into()))
        })
        .collect::<Result<_, _>>()?;
    let grad_l3 = Series::new(base_times, grad_l3);
    let coupling = budget.constants.c5 / budget.nu;
    let drift = mean_drift_sq(pert)?;
    let mut a_full = Vec::with_capacity(times.len());
    let mut g_full = Vec::with_capacity(times.len());
    for (i, (&t, r)) in times.iter().zip(&pert.records).enumerate() {
        let s = grad_l3.at(t).max(0.0);
        a_full.push(coupling * s);
        g_full.push(coupling * (s * drift.values[i] + r.forcing_l2_sq));
    }
    let x = Series::new(times.clone(), pert.series(|r| r.norms.h1_sq));
    let y = Series::new(times.clone(), pert.series(|r| r.norms.h2_sq));
    let a = Series::new(times.clone(), a_full);
    let g = Series::new(times, g_full);

    let wins = windows(pert.t_end(), budget.window);
    if wins.is_empty() {
        return Err(EstimateError::NoWindows {
            t_end: pert.t_end(),
            window: budget.window,
        });
    }
    Ok(wins
        .into_iter()
        .map(|(k, t0, t1)| {
            let xw = x.window(t0, t1);
            let int_a = a.window_cumulative(t0, t1).values;
            let z_sq = xw
                .values
                .iter()
                .zip(&int_a)
                .map(|(x, ia)| (-ia).exp() * x)
                .collect();
            StabilitySeries {
                window_index: k,
                t0,
                t1,
                times: xw.times.clone(),
                x_sq: xw.values,
                y_sq: y.window(t0, t1).values,
                a_sq: a.window(t0, t1).values,
                g_sq: g.window(t0, t1).values,
                z_sq,
                int_a_sq: int_a,
                int_g_sq: g.window_cumulative(t0, t1).values,
            }
        })
        .collect())
}

/// Hypothesis reports and, if any fails, the reason the conclusion is vacuous.
pub fn check_stability_hypotheses(
    windows: &[StabilitySeries],
    budget: &StabilityBudget,
    tol: &ToleranceModel,
) -> (Vec<InequalityReport>, Option<String>) {
    let b = budget;
    let c = &b.constants;
    let mut out = Vec::new();

    let mut m419 =
        conditions::dissipation_budget(b.nu, c.c4, c.c5, b.c_star, b.gamma_star).to_vec();
    m419.push(b.gamma_star - b.gamma);
    out.push(
        InequalityReport::evaluate(
            "4.19",
            "dissipation budget at γ*, c* < νc₄ and γ ≤ γ*",
            vec![0.0; 3],
            m419,
            tol.tol("4.19"),
        )
        .hypothesis(),
    );

    if let Some(first) = windows.first() {
        out.push(
            InequalityReport::scalar(
                "4.12.1",
                "initial perturbation ‖ū(0)‖²_H1 ≤ γ",
                b.gamma - first.x0_sq(),
                tol.tol("4.12.1"),
            )
            .hypothesis(),
        );
    }

    let cap = b.c_star * b.gamma / 4.0;
    let (mut tg, mut mg) = (Vec::new(), Vec::new());
    let (mut tw, mut ma, mut mgi, mut mw) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for w in windows {
        for (t, g) in w.times.iter().zip(&w.g_sq) {
            tg.push(*t);
            mg.push(cap - g);
        }
        let [pa, pg] = conditions::window_integrals(
            b.c_star,
            b.window,
            w.total_a_sq(),
            w.total_g_sq(),
            b.alpha,
            b.gamma,
        );
        tw.push(w.t0);
        ma.push(pa);
        mgi.push(pg);
        mw.push(conditions::contraction_measured(
            b.alpha,
            w.total_a_sq(),
            b.c_star,
            b.window,
        ));
    }
    out.push(
        InequalityReport::evaluate(
            "4.12.2",
            "forcing term G² ≤ c*γ/4",
            tg,
            mg,
            tol.tol("4.12.2"),
        )
        .hypothesis(),
    );
    out.push(
        InequalityReport::evaluate(
            "4.26.1",
            "window coupling ∫A² ≤ c*T/4",
            tw.clone(),
            ma,
            tol.tol("4.26.1"),
        )
        .hypothesis(),
    );
    out.push(
        InequalityReport::evaluate(
            "4.26.2",
            "window forcing ∫G² ≤ αγ",
            tw.clone(),
            mgi,
            tol.tol("4.26.2"),
        )
        .hypothesis(),
    );
    out.push(
        InequalityReport::scalar(
            "4.27",
            "contraction α e^{c*T/4} + e^{−c*T/4} ≤ 1",
            conditions::contraction(b.alpha, b.c_star, b.window),
            tol.tol("4.27"),
        )
        .hypothesis(),
    );
    out.push(
        InequalityReport::evaluate(
            "4.27.window",
            "contraction with the measured coupling α e^{∫A²} + e^{−c*T/4} ≤ 1",
            tw,
            mw,
            tol.tol("4.27.window"),
        )
        .hypothesis(),
    );
    out.push(
        InequalityReport::scalar(
            "4.27.product",
            "product form α ≤ 1",
            conditions::contraction_product(b.alpha),
            0.0,
        )
        .informational(),
    );

    let reason = out
        .iter()
        .find(|r| r.is_unmet())
        .map(|r| format!("hypothesis {} is not met", r.id));
    (out, reason)
}

/// Upper envelope of `X²` over one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub times: Vec<f64>,
    /// Solution of `W' = (A² − c*/2)W + G²`, `W(kT) = X²(kT)`.
    pub linear: Vec<f64>,
    /// RK4 solution of `W' = −W(νc₄ − c₅W²/ν³) + A²W + G²`; infinite once it
    /// leaves `W ≤ γ*`.
    pub nonlinear: Vec<f64>,
    /// `e^{∫A²}∫G² + e^{−c*T/2 + ∫A²}X²(kT)`.
    pub endpoint_bound: f64,
    pub exceeds_gamma_star: bool,
}

pub fn gronwall_envelope(series: &StabilitySeries, budget: &StabilityBudget) -> Envelope {
    let b = budget;
    let x0 = series.x0_sq();
    let half = b.c_star / 2.0;
    let phi: Vec<f64> = series
        .times
        .iter()
        .zip(&series.int_a_sq)
        .map(|(t, ia)| ia - half * (t - series.t0))
        .collect();
    let weighted = Series::new(
        series.times.clone(),
        series
            .g_sq
            .iter()
            .zip(&phi)
            .map(|(g, p)| (-p).exp() * g)
            .collect(),
    );
    let inner = weighted.cumulative();
    let linear: Vec<f64> = phi
        .iter()
        .zip(&inner)
        .map(|(p, i)| p.exp() * (x0 + i))
        .collect();

    let c = &b.constants;
    let rate = |t: f64, w: f64| {
        let a = series.at(&series.a_sq, t);
        let g = series.at(&series.g_sq, t);
        -w * (b.nu * c.c4 - c.c5 * w * w / b.nu.powi(3)) + a * w + g
    };
    let mut nonlinear = vec![x0];
    let mut w = x0;
    for pair in series.times.windows(2) {
        let (t, h) = (pair[0], pair[1] - pair[0]);
        if w.is_finite() && w <= b.gamma_star {
            let k1 = rate(t, w);
            let k2 = rate(t + h / 2.0, w + h / 2.0 * k1);
            let k3 = rate(t + h / 2.0, w + h / 2.0 * k2);
            let k4 = rate(t + h, w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !w.is_finite() || w > b.gamma_star {
            w = f64::INFINITY;
        }
        nonlinear.push(w);
    }

    let ia = series.total_a_sq();
    let endpoint_bound = ia.exp() * series.total_g_sq() + (-half * b.window + ia).exp() * x0;
    let exceeds_gamma_star = linear.iter().any(|v| *v > b.gamma_star);
    Envelope {
        times: series.times.clone(),
        linear,
        nonlinear,
        endpoint_bound,
        exceeds_gamma_star,
    }
}

/// The conclusion `X² ≤ γ`, the envelope comparison and the window-end
/// recursion. `hypotheses` carries the reason the conclusion is vacuous.
pub fn verify_stability_conclusion(
    windows: &[StabilitySeries],
    envelopes: &[Envelope],
    budget: &StabilityBudget,
    tol: &ToleranceModel,
    hypotheses: Option<&str>,
) -> Vec<InequalityReport> {
    let b = budget;
    let (mut t, mut m413, mut menv) = (Vec::new(), Vec::new(), Vec::new());
    let (mut te, mut m425, mut mrec) = (Vec::new(), Vec::new(), Vec::new());
    for (w, e) in windows.iter().zip(envelopes) {
        for (i, x) in w.x_sq.iter().enumerate() {
            // Window starts coincide with the previous window's end.
            if i == 0 && w.window_index > 0 {
                continue;
            }
            t.push(w.times[i]);
            m413.push(b.gamma - x);
            menv.push(e.linear[i] - x);
        }
        te.push(w.t1);
        m425.push(e.endpoint_bound - w.x_end_sq());
        let ia = w.total_a_sq();
        let substituted =
            ia.exp() * b.alpha * b.gamma + (-b.c_star * b.window / 2.0 + ia).exp() * w.x0_sq();
        mrec.push(b.gamma - substituted);
    }
    let escaped = envelopes
        .iter()
        .any(|e| e.exceeds_gamma_star)
        .then_some("envelope leaves the region X² ≤ γ*");
    vec![
        InequalityReport::conditional(
            "4.13",
            "‖ū(t)‖²_H1 ≤ γ",
            t.clone(),
            m413,
            tol.tol("4.13"),
            hypotheses,
        ),
        InequalityReport::conditional(
            "envelope",
            "X² below the Grönwall envelope",
            t,
            menv,
            tol.tol("envelope"),
            escaped,
        ),
        InequalityReport::conditional(
            "4.25",
            "window-end value below e^{∫A²}∫G² + e^{−c*T/2+∫A²}X²(kT)",
            te.clone(),
            m425,
            tol.tol("4.25"),
            escaped,
        ),
        InequalityReport::conditional(
            "4.25.gamma",
            "window-end bound with ∫G² ≤ αγ stays below γ",
            te,
            mrec,
            tol.tol("4.25.gamma"),
            hypotheses,
        ),
    ]
}
