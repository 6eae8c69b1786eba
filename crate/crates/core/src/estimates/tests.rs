use super::*;
use crate::field::{random_divfree_field, Field};
use crate::forcing::{ForcingField, ForcingMode, ForcingSpec, Shape};
use crate::grid::TorusGrid;
use crate::solver::{run_2d_base, run_perturbation, taylor_green_exact, SolverConfig, TimeScheme};
use std::f64::consts::PI;

fn box2(n: usize) -> TorusGrid {
    TorusGrid::new(2.0 * PI, n, 2).unwrap()
}

fn constants() -> StabilityConstants {
    constants_from_c3(&box2(8), 0.03)
}

#[test]
fn unforced_decay_satisfies_base_bounds() {
    let g = box2(16);
    let cfg = SolverConfig::new(g, 0.1, 0.01, 3.0).with_window(1.0);
    let v0 = taylor_green_exact(&g, 0.1, 0.0).unwrap();
    let base = run_2d_base(&cfg, &v0, &ForcingField::zero(g)).unwrap();
    let budget = compute_a_constants(&base, 1.0, None).unwrap();
    assert_eq!(budget.a1_sq, 0.0);
    assert!((budget.a2_sq - budget.energy0).abs() < 1e-12);
    let reports = verify_decay_2d(&base, &budget, &ToleranceModel::floor_only(0.01)).unwrap();
    for r in &reports {
        assert!(
            r.passed(),
            "{} worst {} at {}",
            r.id,
            r.worst_margin,
            r.worst_time
        );
    }
    let (monitor, r) = w1sigma_monitor(&base, 1.0, 4.0, &ToleranceModel::floor_only(0.01)).unwrap();
    assert!(r.passed());
    assert!(monitor.window_maxima.windows(2).all(|w| w[1] <= w[0]));
    assert!(w1sigma_monitor(&base, 1.0, 3.0, &ToleranceModel::floor_only(0.01)).is_err());
}

#[test]
fn inconsistent_constant_is_caught() {
    let g = box2(16);
    let cfg = SolverConfig::new(g, 0.1, 0.01, 1.0);
    let v0 = taylor_green_exact(&g, 0.1, 0.0).unwrap();
    let base = run_2d_base(&cfg, &v0, &ForcingField::zero(g)).unwrap();
    let mut budget = compute_a_constants(&base, 1.0, None).unwrap();
    budget.a3_sq *= 0.5;
    let reports = verify_decay_2d(&base, &budget, &ToleranceModel::floor_only(0.01)).unwrap();
    assert!(!reports.iter().find(|r| r.id == "3.2").unwrap().passed());
}

#[test]
fn planar_advection_cancels_against_the_laplacian() {
    let g = box2(16);
    let v = random_divfree_field(&g, 9, 1.5).unwrap();
    assert!(vorticity_cancellation_residual(&v).unwrap() < 1e-12);
    let v3 = random_divfree_field(&g.with_dim(3).unwrap(), 9, 1.5).unwrap();
    assert!(vorticity_cancellation_residual(&v3).is_err());
    let gradient = Field::from_fn(g, 2, |x| [x[0].cos(), 0.0, 0.0]).unwrap();
    assert!(vorticity_cancellation_residual(&gradient).is_err());
}

fn synthetic(a: f64, g: f64, x0: f64, t1: f64, n: usize) -> StabilitySeries {
    let times: Vec<f64> = (0..=n).map(|i| t1 * i as f64 / n as f64).collect();
    StabilitySeries {
        window_index: 0,
        t0: 0.0,
        t1,
        x_sq: times.iter().map(|_| x0).collect(),
        y_sq: times.iter().map(|_| x0).collect(),
        a_sq: vec![a; n + 1],
        g_sq: vec![g; n + 1],
        z_sq: times.iter().map(|t| (-a * t).exp() * x0).collect(),
        int_a_sq: times.iter().map(|t| a * t).collect(),
        int_g_sq: times.iter().map(|t| g * t).collect(),
        times,
    }
}

#[test]
fn envelope_closed_forms() {
    let c = constants();
    let budget = StabilityBudget::new(1.0, 2.0, 0.01, 0.2, c, None).unwrap();
    let half = budget.c_star / 2.0;

    let s = synthetic(0.0, 0.0, 0.008, 2.0, 200);
    let e = gronwall_envelope(&s, &budget);
    for (t, w) in e.times.iter().zip(&e.linear) {
        assert!((w - 0.008 * (-half * t).exp()).abs() < 1e-15);
    }
    assert!(e
        .nonlinear
        .iter()
        .zip(&e.linear)
        .all(|(n, l)| n <= &(l + 1e-15)));

    let g = 1e-3;
    let s = synthetic(0.0, g, 0.008, 2.0, 200);
    let e = gronwall_envelope(&s, &budget);
    for (t, w) in e.times.iter().zip(&e.linear) {
        let exact = g / half + (0.008 - g / half) * (-half * t).exp();
        assert!((w - exact).abs() < 1e-12 * exact, "{t}: {w} vs {exact}");
    }
    let exact_end = g * 2.0 + (-half * 2.0f64).exp() * 0.008;
    assert!((e.endpoint_bound - exact_end).abs() < 1e-12);
}

#[test]
fn gamma_above_threshold_is_refused() {
    let c = constants();
    let gs = gamma_star(1.0, &c, 0.9 * c.c4);
    assert!(matches!(
        StabilityBudget::new(1.0, 1.0, 1.01 * gs, 0.2, c, None),
        Err(EstimateError::GammaTooLarge { .. })
    ));
    assert!(StabilityBudget::new(1.0, 1.0, gs, 0.2, c, None).is_ok());
    assert!(StabilityBudget::new(1.0, 1.0, 0.5 * gs, 0.2, c, Some(c.c4)).is_err());
}

fn small_stability_case(
    g_amp: f64,
) -> (Vec<InequalityReport>, Option<String>, Vec<InequalityReport>) {
    let nu = 1.0;
    let g2 = box2(8);
    let g3 = g2.with_dim(3).unwrap();
    let c = constants_from_c3(&g3, 0.03);
    let c_star = 0.9 * nu * c.c4;
    let window = 4.0 * 2f64.ln() / c_star;
    let t_end = 2.0 * window;
    let dt = 0.02;
    let t_run = (t_end / dt).ceil() * dt;
    let base_force = ForcingSpec::modes(vec![ForcingMode::steady(
        [0.008, 0.0, 0.0],
        [0, 1, 0],
        Shape::Sin,
    )]);
    let base_cfg = SolverConfig::new(g2, nu, dt, t_run).with_window(window);
    let base = run_2d_base(
        &base_cfg,
        &Field::zero_vector(g2),
        &ForcingField::build(&base_force, &g2).unwrap(),
    )
    .unwrap();
    let pert_force = ForcingSpec::modes(vec![ForcingMode::steady(
        [0.0, 0.0, g_amp],
        [1, 0, 0],
        Shape::Sin,
    )]);
    let u0 = Field::from_fn(g3, 3, |x| [0.0, 0.0, 0.01 * x[0].sin()]).unwrap();
    let pert_cfg = SolverConfig::new(g3, nu, dt, t_run).with_window(window);
    let pert = run_perturbation(
        &pert_cfg,
        &base,
        &u0,
        &ForcingField::build(&pert_force, &g3).unwrap(),
    )
    .unwrap();
    let gamma = 0.5 * gamma_star(nu, &c, c_star);
    let budget = StabilityBudget::new(nu, window, gamma, 0.2, c, None).unwrap();
    let series = stability_series(&pert, &base, &budget).unwrap();
    assert_eq!(series.len(), 2);
    let tol = ToleranceModel::floor_only(dt);
    let (hyp, reason) = check_stability_hypotheses(&series, &budget, &tol);
    let envs: Vec<Envelope> = series
        .iter()
        .map(|s| gronwall_envelope(s, &budget))
        .collect();
    let concl = verify_stability_conclusion(&series, &envs, &budget, &tol, reason.as_deref());
    (hyp, reason, concl)
}

#[test]
fn small_perturbation_stays_small() {
    let (hyp, reason, concl) = small_stability_case(2e-4);
    for r in &hyp {
        assert!(r.passed(), "{} {}", r.id, r.worst_margin);
    }
    assert!(reason.is_none());
    for r in &concl {
        assert!(r.passed(), "{} {}", r.id, r.worst_margin);
    }
}

#[test]
fn oversized_forcing_makes_the_conclusion_vacuous() {
    let (hyp, reason, concl) = small_stability_case(0.05);
    assert!(hyp
        .iter()
        .any(|r| r.id == "4.12.2" && r.status == Status::Unmet));
    assert!(reason.is_some());
    let c = concl.iter().find(|r| r.id == "4.13").unwrap();
    assert_eq!(c.status, Status::Vacuous);
}

#[test]
fn l2_bounds_on_small_perturbation() {
    let nu = 1.0;
    let g2 = box2(8);
    let g3 = g2.with_dim(3).unwrap();
    let dt = 0.02;
    let window = 4.0;
    let base_force = ForcingSpec::modes(vec![ForcingMode::steady(
        [0.01, 0.0, 0.0],
        [0, 1, 0],
        Shape::Sin,
    )]);
    let cfg2 = SolverConfig::new(g2, nu, dt, 8.0)
        .with_window(window)
        .with_scheme(TimeScheme::Imex);
    let base = run_2d_base(
        &cfg2,
        &Field::zero_vector(g2),
        &ForcingField::build(&base_force, &g2).unwrap(),
    )
    .unwrap();
    let a = compute_a_constants(&base, window, None).unwrap();
    let u0 = Field::from_fn(g3, 3, |x| [0.0, 0.0, 0.05 * x[0].sin() + 0.01]).unwrap();
    let cfg3 = SolverConfig::new(g3, nu, dt, 8.0)
        .with_window(window)
        .with_scheme(TimeScheme::Imex);
    let pert = run_perturbation(&cfg3, &base, &u0, &ForcingField::zero(g3)).unwrap();
    let b = compute_b_constants(&pert, &a, &constants_from_c3(&g3, 0.03)).unwrap();
    assert!(b.b2_sq_energy > 0.0 && b.b2_sq > 0.0);
    assert!(b.hypothesis_holds());
    let reports = verify_l2_stability(&pert, &b, &ToleranceModel::floor_only(dt)).unwrap();
    for r in &reports {
        assert!(r.passed(), "{} {}", r.id, r.worst_margin);
    }
}
