//! Scalar admissibility conditions on the constants and the data.
//!
//! Each evaluator returns `rhs − lhs`; the condition holds iff it is `≥ 0`.

/// Smallness of the base forcing and initial enstrophy relative to the
/// window length:
/// `(2 − e^{−νcT})/(cν(1 − e^{−νcT})) · sup∫‖f̄‖² + ‖∇v̄(0)‖² ≤ ν²c₁²T/(8c₃)`.
pub fn base_smallness(
    nu: f64,
    window: f64,
    c_poincare: f64,
    c1: f64,
    c3: f64,
    sup_forcing: f64,
    enstrophy0: f64,
) -> f64 {
    let e = (-nu * c_poincare * window).exp();
    let lhs = (2.0 - e) / (c_poincare * nu * (1.0 - e)) * sup_forcing + enstrophy0;
    nu * nu * c1 * c1 * window / (8.0 * c3) - lhs
}

/// The two parts of the dissipation budget: `νc₄ − c₅γ*²/ν³ − c*/2` and
/// `νc₄ − c*` (which must be strictly positive).
pub fn dissipation_budget(nu: f64, c4: f64, c5: f64, c_star: f64, gamma_star: f64) -> [f64; 2] {
    [
        nu * c4 - c5 * gamma_star * gamma_star / nu.powi(3) - c_star / 2.0,
        nu * c4 - c_star,
    ]
}

/// Window integrals: `c*T/4 − ∫A²` and `αγ − ∫G²`.
pub fn window_integrals(
    c_star: f64,
    window: f64,
    int_a_sq: f64,
    int_g_sq: f64,
    alpha: f64,
    gamma: f64,
) -> [f64; 2] {
    [c_star * window / 4.0 - int_a_sq, alpha * gamma - int_g_sq]
}

/// `1 − (α e^{c*T/4} + e^{−c*T/4})`.
pub fn contraction(alpha: f64, c_star: f64, window: f64) -> f64 {
    let s = c_star * window / 4.0;
    1.0 - (alpha * s.exp() + (-s).exp())
}

/// `1 − (α e^{∫A²} + e^{−c*T/4})` with the measured coupling integral.
pub fn contraction_measured(alpha: f64, int_a_sq: f64, c_star: f64, window: f64) -> f64 {
    1.0 - (alpha * int_a_sq.exp() + (-c_star * window / 4.0).exp())
}

/// Product form `α e^{c*T/4} · e^{−c*T/4} = α ≤ 1`; weaker than the sum.
pub fn contraction_product(alpha: f64) -> f64 {
    1.0 - alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_examples() {
        // α = 0.3 with c*T/4 = 1 gives 0.3e + 1/e ≈ 1.1833 > 1.
        let m = contraction(0.3, 4.0, 1.0);
        assert!((m + 0.18328).abs() < 1e-4);
        assert!(contraction(0.2, 4.0 * 2f64.ln(), 1.0) >= 0.0);
        assert!((contraction(0.25, 4.0 * 2f64.ln(), 1.0)).abs() < 1e-15);
        assert!(contraction_product(0.3) > 0.0);
    }

    #[test]
    fn budget_margins() {
        let [a, b] = dissipation_budget(1.0, 0.5, 2.0, 0.4, 0.1);
        assert!((a - (0.5 - 0.02 - 0.2)).abs() < 1e-15);
        assert!((b - 0.1).abs() < 1e-15);
        let [p, q] = window_integrals(1.0, 2.0, 0.5, 0.1, 0.2, 1.0);
        assert_eq!(p, 0.0);
        assert!((q - 0.1).abs() < 1e-15);
    }
}
