//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ns_torus::estimates::vorticity_cancellation_residual;
use ns_torus::estimates::{
    calibrate_constants, conditions, gronwall_envelope, stability_series, StabilityBudget, Status,
};
use ns_torus::experiment::{run_experiment, scenarios, ExperimentSpec, RunArtifacts};
use ns_torus::field::{random_divfree_field, Field};
use ns_torus::forcing::{ForcingField, ForcingMode, ForcingSpec, Shape};
use ns_torus::grid::TorusGrid;
use ns_torus::norms;
use ns_torus::solver::{
    mean_ode_integrate, run_2d_base, run_full_3d, run_perturbation, taylor_green_exact,
    SolverConfig, TimeScheme, Trajectory,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn box_grid(n: usize, dim: usize) -> TorusGrid {
    TorusGrid::new(2.0 * PI, n, dim).unwrap()
}

fn l2_dist(a: &Field, b: &Field) -> f64 {
    norms::l2_sq(&a.sub(b).unwrap()).sqrt()
}

fn taylor_green() -> Outcome {
    let started = Instant::now();
    let g = box_grid(32, 2);
    let nu = 0.1;
    let exact = taylor_green_exact(&g, nu, 1.0).unwrap();
    let v0 = taylor_green_exact(&g, nu, 0.0).unwrap();
    let err = |dt: f64, scheme: TimeScheme| {
        let cfg = SolverConfig::new(g, nu, dt, 1.0)
            .with_scheme(scheme)
            .with_stride(usize::MAX);
        let traj = run_2d_base(&cfg, &v0, &ForcingField::zero(g)).unwrap();
        traj.snapshots.last().unwrap().max_abs_diff(&exact).unwrap()
    };
    let coarse = err(1e-3, TimeScheme::Imex);
    let fine = err(5e-4, TimeScheme::Imex);
    let exact_factor = err(1e-3, TimeScheme::IntegratingFactor);
    let secs = started.elapsed().as_secs_f64();
    check(coarse <= 1e-6, || format!("error {coarse:e} > 1e-6"))?;
    check(coarse / fine >= 3.5, || {
        format!("halving ratio {:.3} < 3.5", coarse / fine)
    })?;
    check(exact_factor <= 1e-6, || {
        format!("integrating-factor error {exact_factor:e}")
    })?;
    check(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "Crank-Nicolson error {coarse:.3e}, ratio {:.3}; integrating factor error {exact_factor:.1e}; {secs:.1} s",
        coarse / fine
    ))
}

fn energy_identity() -> Outcome {
    let g = box_grid(16, 3);
    let (nu, dt) = (0.05, 1e-3);
    let v0 = random_divfree_field(&g, 5, 2.0).unwrap().scale(0.5);
    let cfg = SolverConfig::new(g, nu, dt, 1000.0 * dt).with_stride(usize::MAX);
    let traj = run_full_3d(&cfg, &v0, &ForcingField::zero(g)).unwrap();
    let e: Vec<f64> = traj.series(|r| r.norms.l2_sq);
    let d: Vec<f64> = traj.series(|r| r.norms.grad_l2_sq);
    check(e.len() == 1001, || format!("{} records", e.len()))?;
    let mut worst = 0.0f64;
    for n in 1..e.len() - 1 {
        let rate = (e[n + 1] - e[n - 1]) / (2.0 * dt);
        let dissipation = 2.0 * nu * d[n];
        worst = worst.max((rate + dissipation).abs() / dissipation);
    }
    check(worst <= 1e-6, || {
        format!("worst relative residual {worst:e}")
    })?;
    Ok(format!(
        "worst relative residual {worst:.3e} over 1000 steps"
    ))
}

fn poincare() -> Outcome {
    let mut worst = f64::INFINITY;
    for (i, length) in [2.0 * PI, 1.0, 3.7].into_iter().enumerate() {
        let g = TorusGrid::new(length, 8, 3).unwrap();
        let k2 = g.scale().powi(2);
        for s in 0..334u64 {
            let f = random_divfree_field(&g, 1000 * i as u64 + s, [0.5, 1.0, 2.5][s as usize % 3])
                .unwrap()
                .mean_free();
            let r = norms::poincare_ratio(&f).unwrap().grad_over_l2 / k2;
            worst = worst.min(r);
        }
        let lowest = Field::from_fn(g, 3, |x| [0.0, (g.scale() * x[0]).sin(), 0.0]).unwrap();
        let r = norms::poincare_ratio(&lowest).unwrap().grad_over_l2;
        check((r - k2).abs() <= 1e-12 * k2.max(1.0), || {
            format!("lowest mode ratio {r} vs {k2} at L = {length}")
        })?;
    }
    check(worst >= 1.0 - 1e-10, || format!("min ratio/κ² = {worst}"))?;
    Ok(format!(
        "1002 fields, min ratio/κ² = {worst:.6}; lowest mode sharp"
    ))
}

fn vorticity_cancellation() -> Outcome {
    let g = box_grid(32, 2);
    let mut worst = 0.0f64;
    for s in 0..500u64 {
        let f = random_divfree_field(&g, s, [0.5, 1.0, 2.0, 3.0][s as usize % 4]).unwrap();
        worst = worst.max(vorticity_cancellation_residual(&f).unwrap());
    }
    check(worst <= 1e-9, || format!("worst residual {worst:e}"))?;
    Ok(format!("500 fields, worst normalised residual {worst:.3e}"))
}

fn run_in(spec: &ExperimentSpec, dir: &Path) -> RunArtifacts {
    run_experiment(spec, dir).unwrap_or_else(|e| panic!("{}: {e}", spec.name))
}

fn decay_2d() -> Outcome {
    let spec = scenarios::load("forced-2d").unwrap();
    check(
        spec.windows == 10 && spec.window == Some(1.0) && spec.dt_halving,
        || "scenario is not 10 windows of length 1 with dt halving".into(),
    )?;
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(&spec, dir.path());
    let mut worst = Vec::new();
    for id in ["3.1", "3.2", "3.3", "3.4", "3.5"] {
        let r = a.reports.get(id).ok_or(format!("missing {id}"))?;
        check(r.status == Status::Pass, || {
            format!(
                "{id}: {:?}, margin {:e}, tol {:e}",
                r.status, r.worst_margin, r.tolerance
            )
        })?;
        worst.push(format!("{id} {:.2e}", r.worst_margin));
    }
    Ok(format!("worst margins: {}", worst.join(", ")))
}

fn mean_evolution() -> Outcome {
    let omega = 2.5;
    let sinusoid = ForcingMode {
        amplitude: [0.3, -0.1, 0.0],
        wave: [0, 0, 0],
        shape: Shape::Cos,
        decay: 0.0,
        omega,
        phase: 0.4,
    };
    let steady = ForcingMode::steady([0.2, 0.1, 0.0], [0, 0, 0], Shape::Cos);
    let cellular = ForcingMode::steady([0.0, 0.2, 0.0], [1, 0, 0], Shape::Cos);
    let mut worst = 0.0f64;
    for modes in [
        vec![steady.clone(), cellular.clone()],
        vec![sinusoid, cellular],
    ] {
        let spec = ForcingSpec::modes(modes);
        let g2 = box_grid(16, 2);
        let v0 = random_divfree_field(&g2, 9, 1.5)
            .unwrap()
            .with_mean(&[0.5, -0.25, 0.0]);
        let traj = run_2d_base(
            &SolverConfig::new(g2, 0.1, 1e-3, 1.0),
            &v0,
            &ForcingField::build(&spec, &g2).unwrap(),
        )
        .unwrap();
        worst = worst.max(mean_gap(&traj)?);
        let g3 = box_grid(8, 3);
        let u0 = random_divfree_field(&g3, 4, 1.5)
            .unwrap()
            .with_mean(&[0.1, 0.0, -0.3]);
        let traj = run_full_3d(
            &SolverConfig::new(g3, 0.1, 1e-3, 1.0).with_stride(usize::MAX),
            &u0,
            &ForcingField::build(&spec, &g3).unwrap(),
        )
        .unwrap();
        worst = worst.max(mean_gap(&traj)?);
    }
    check(worst <= 1e-8, || format!("worst mean error {worst:e}"))?;
    Ok(format!(
        "constant and sinusoidal forcing, worst error {worst:.3e}"
    ))
}

fn mean_gap(traj: &Trajectory) -> Result<f64, String> {
    let fm: Vec<[f64; 3]> = traj.records.iter().map(|r| r.forcing_mean).collect();
    let ode = mean_ode_integrate(&traj.times(), &fm, traj.means()[0], (0.0, traj.t_end()))
        .map_err(|e| e.to_string())?;
    Ok(traj
        .records
        .iter()
        .zip(&ode)
        .flat_map(|(r, m)| (0..3).map(move |c| (r.mean[c] - m.value[c]).abs()))
        .fold(0.0, f64::max))
}

fn split_consistency() -> Outcome {
    let g2 = box_grid(16, 2);
    let g3 = box_grid(16, 3);
    let nu = 0.2;
    let fs = ForcingSpec::modes(vec![ForcingMode::steady(
        [0.0, 0.3, 0.0],
        [1, 0, 0],
        Shape::Cos,
    )]);
    let gs = ForcingSpec::modes(vec![ForcingMode::steady(
        [0.05, 0.0, 0.05],
        [0, 1, 1],
        Shape::Sin,
    )]);
    let total = ForcingSpec::Sum {
        parts: vec![fs.clone(), gs.clone()],
    };
    let v0 = taylor_green_exact(&g2, nu, 0.0).unwrap().scale(0.5);
    let u0 = random_divfree_field(&g3, 8, 2.0).unwrap().scale(0.1);
    let err = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let base = run_2d_base(
            &SolverConfig::new(g2, nu, dt, 1.0),
            &v0,
            &ForcingField::build(&fs, &g2).unwrap(),
        )
        .unwrap();
        let cfg3 = SolverConfig::new(g3, nu, dt, 1.0).with_stride(steps);
        let pert =
            run_perturbation(&cfg3, &base, &u0, &ForcingField::build(&gs, &g3).unwrap()).unwrap();
        let w0 = v0.lift_to_3d().unwrap().add(&u0).unwrap();
        let direct = run_full_3d(&cfg3, &w0, &ForcingField::build(&total, &g3).unwrap()).unwrap();
        let split = base
            .snapshots
            .last()
            .unwrap()
            .lift_to_3d()
            .unwrap()
            .add(pert.snapshots.last().unwrap())
            .unwrap();
        l2_dist(direct.snapshots.last().unwrap(), &split)
    };
    let (coarse, fine) = (err(1e-3), err(5e-4));
    check(coarse <= 1e-5, || format!("difference {coarse:e} > 1e-5"))?;
    check(coarse / fine >= 3.5, || {
        format!("halving ratio {:.3}", coarse / fine)
    })?;
    Ok(format!(
        "difference {coarse:.3e} at t = 1, halving ratio {:.3}",
        coarse / fine
    ))
}

fn stability_conclusion() -> Outcome {
    let started = Instant::now();
    let spec = scenarios::load("stability-theorem").unwrap();
    let budget = spec.stability_budget().unwrap();
    check(spec.windows == 5 && spec.grid.n == 16, || {
        "scenario shape changed".into()
    })?;
    check(
        (budget.gamma - 0.5 * budget.gamma_star).abs() <= 1e-15,
        || {
            format!(
                "γ = {} is not γ*/2 = {}",
                budget.gamma,
                budget.gamma_star / 2.0
            )
        },
    )?;
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(&spec, dir.path());
    for id in [
        "4.12.1", "4.12.2", "4.26.1", "4.26.2", "4.27", "4.13", "envelope",
    ] {
        let r = a.reports.get(id).ok_or(format!("missing {id}"))?;
        check(r.status == Status::Pass, || {
            format!(
                "{id}: {:?}, margin {:e}, tol {:e}",
                r.status, r.worst_margin, r.tolerance
            )
        })?;
    }
    let pert = Trajectory::read_dir(&dir.path().join("perturbation")).unwrap();
    let x_max = pert
        .records
        .iter()
        .map(|r| r.norms.h1_sq)
        .fold(0.0, f64::max);
    check(x_max <= budget.gamma, || format!("max X² = {x_max:e} > γ"))?;
    let secs = started.elapsed().as_secs_f64();
    check(secs < 300.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "max X² = {x_max:.4e} ≤ γ = {:.4e}; envelope margin {:.2e}; {secs:.1} s",
        budget.gamma,
        a.reports.get("envelope").unwrap().worst_margin
    ))
}

fn gronwall_reduced() -> Outcome {
    let g2 = box_grid(8, 2);
    let g3 = box_grid(8, 3);
    let nu = 1.0;
    let constants = calibrate_constants(&g3, 16, 0).unwrap().constants;
    let c_star = 0.9 * nu * constants.c4;
    let window = 4.0 * 2f64.ln() / c_star;
    let dt = 0.01;
    let t_end = (2.0 * window / dt).ceil() * dt;
    let base = run_2d_base(
        &SolverConfig::new(g2, nu, dt, t_end),
        &Field::zero_vector(g2),
        &ForcingField::zero(g2),
    )
    .unwrap();
    let u0 = random_divfree_field(&g3, 21, 1.0)
        .unwrap()
        .mean_free()
        .scale(0.05);
    let pert = run_perturbation(
        &SolverConfig::new(g3, nu, dt, t_end).with_window(window),
        &base,
        &u0,
        &ForcingField::zero(g3),
    )
    .unwrap();
    let budget = StabilityBudget::new(nu, window, 1e-3, 0.2, constants, Some(c_star)).unwrap();
    let series = stability_series(&pert, &base, &budget).unwrap();
    let x0 = series[0].x_sq[0];
    let mut worst = f64::INFINITY;
    for s in &series {
        check(s.a_sq.iter().chain(&s.g_sq).all(|v| *v == 0.0), || {
            "coupling terms do not vanish".into()
        })?;
        let env = gronwall_envelope(s, &budget);
        for ((t, x), w) in s.times.iter().zip(&s.x_sq).zip(&env.linear) {
            let bound = x0 * (-c_star * t / 2.0).exp();
            worst = worst.min(1.0 - x / (bound * (1.0 + 1e-3)));
            let closed = s.x_sq[0] * (-c_star * (t - s.t0) / 2.0).exp();
            check((w - closed).abs() <= 1e-12 * closed, || {
                format!("envelope {w:e} vs closed form {closed:e} at t = {t}")
            })?;
        }
    }
    check(worst >= 0.0, || {
        format!("X² exceeds the decay bound (margin {worst:e})")
    })?;
    Ok(format!(
        "{} windows, min relative headroom {worst:.3}",
        series.len()
    ))
}

fn scalar_conditions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut worst = 0.0f64;
    let mut cmp = |a: f64, b: f64| {
        worst = worst.max((a - b).abs() / b.abs().max(1.0));
    };
    for _ in 0..50 {
        let nu: f64 = rng.random_range(0.05..5.0);
        let t: f64 = rng.random_range(0.1..20.0);
        let c: f64 = rng.random_range(0.01..2.0);
        let c1 = rng.random_range(0.01..1.0);
        let c3 = rng.random_range(0.001..1.0);
        let c4 = rng.random_range(0.01..1.0);
        let c5 = rng.random_range(1.0..100.0);
        let sup_f = rng.random_range(0.0..3.0);
        let ens = rng.random_range(0.0..3.0);
        let c_star = rng.random_range(0.01..2.0);
        let g_star = rng.random_range(0.0..1.0);
        let (int_a, int_g) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let alpha = rng.random_range(0.01..1.0);
        let gamma = rng.random_range(0.0..1.0);

        let q = (-nu * c * t).exp();
        let lhs = sup_f * (2.0 - q) / (nu * c * (1.0 - q)) + ens;
        cmp(
            conditions::base_smallness(nu, t, c, c1, c3, sup_f, ens),
            nu.powi(2) * c1.powi(2) * t / (8.0 * c3) - lhs,
        );
        let [d1, d2] = conditions::dissipation_budget(nu, c4, c5, c_star, g_star);
        cmp(
            d1,
            nu * c4 - c5 * g_star.powi(2) / nu.powi(3) - 0.5 * c_star,
        );
        cmp(d2, nu * c4 - c_star);
        let [w1, w2] = conditions::window_integrals(c_star, t, int_a, int_g, alpha, gamma);
        cmp(w1, 0.25 * c_star * t - int_a);
        cmp(w2, alpha * gamma - int_g);
        let e = (0.25 * c_star * t).exp();
        cmp(
            conditions::contraction(alpha, c_star, t),
            1.0 - alpha * e - 1.0 / e,
        );
    }
    check(worst <= 1e-12, || format!("worst relative gap {worst:e}"))?;
    Ok(format!("50 tuples, worst relative gap {worst:.1e}"))
}

fn determinism() -> Outcome {
    let spec = scenarios::load("stability-smoke").unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_in(&spec, a.path());
    let rb = run_in(&spec, b.path());
    check(ra.config_hash == rb.config_hash, || {
        "config hashes differ".into()
    })?;
    let files = [
        "base/diagnostics.csv",
        "perturbation/diagnostics.csv",
        "windows.csv",
        "inequalities.json",
    ];
    for f in files {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        check(!x.is_empty() && x == y, || {
            format!("{f} differs between runs")
        })?;
    }
    Ok(format!(
        "{} files byte-identical across two runs",
        files.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Taylor-Green validation", taylor_green),
        ("energy identity", energy_identity),
        ("Poincaré sharpness", poincare),
        ("vorticity cancellation", vorticity_cancellation),
        ("2D decay inequalities", decay_2d),
        ("mean evolution", mean_evolution),
        ("split consistency", split_consistency),
        ("stability conclusion", stability_conclusion),
        ("Grönwall reduced case", gronwall_reduced),
        ("scalar condition arithmetic", scalar_conditions),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
