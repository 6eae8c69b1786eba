use std::f64::consts::PI;

use proptest::prelude::*;

use ns_torus::estimates::conditions;
use ns_torus::estimates::series::Series;
use ns_torus::estimates::{
    gronwall_envelope, StabilityBudget, StabilityConstants, StabilitySeries,
};
use ns_torus::experiment::{parse_config, ExperimentSpec};
use ns_torus::fft;
use ns_torus::field::{random_divfree_field, Field};
use ns_torus::grid::TorusGrid;
use ns_torus::norms;
use ns_torus::quadrature::{self, QuadratureRule};

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    (
        prop::sample::select(vec![4usize, 6, 8]),
        2usize..=3,
        0.5f64..8.0,
    )
        .prop_map(|(n, dim, l)| TorusGrid::new(l, n, dim).unwrap())
}

fn field_strategy() -> impl Strategy<Value = Field> {
    (grid_strategy(), any::<u64>(), 0.3f64..3.0)
        .prop_map(|(g, seed, decay)| random_divfree_field(&g, seed, decay).unwrap())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_round_trip(g in grid_strategy(), values in prop::collection::vec(-1.0f64..1.0, 512)) {
        let v: Vec<f64> = values.iter().cycle().take(g.physical_len()).copied().collect();
        let back = fft::inverse(&g, &fft::forward(&g, &v));
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_matches_quadrature(f in field_strategy()) {
        let g = *f.grid();
        let phys = f.physical();
        let quad: f64 = (0..g.physical_len())
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .sum::<f64>()
            * g.volume()
            / g.physical_len() as f64;
        prop_assert!(close(norms::l2_sq(&f), quad, 1e-11));
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal(f in field_strategy(), seed in any::<u64>()) {
        let g = *f.grid();
        let noise = Field::from_fn(g, g.dim(), |x| {
            let s = (seed % 7) as f64;
            [(x[1] + s).sin(), (x[0] * 2.0).cos(), (x[0] - x[1]).sin()]
        });
        let raw = f.add(&noise.unwrap()).unwrap();
        let p = raw.leray_project().unwrap();
        let pp = p.leray_project().unwrap();
        prop_assert!(p.max_abs_diff(&pp).unwrap() < 1e-13);
        prop_assert!(p.relative_divergence().unwrap() < 1e-12);
        prop_assert!(f.leray_project().unwrap().max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn norms_are_homogeneous(f in field_strategy(), a in -5.0f64..5.0) {
        let s = f.scale(a);
        prop_assert!(close(norms::l2_sq(&s), a * a * norms::l2_sq(&f), 1e-12));
        prop_assert!(close(norms::grad_l2_sq(&s), a * a * norms::grad_l2_sq(&f), 1e-12));
        prop_assert!(close(
            norms::lp_norm(&s, 3.0).unwrap(),
            a.abs() * norms::lp_norm(&f, 3.0).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn lp_triangle_inequality(f in field_strategy(), seed in any::<u64>(), p in 1.0f64..8.0) {
        let g = random_divfree_field(f.grid(), seed, 1.0).unwrap();
        let sum = norms::lp_norm(&f.add(&g).unwrap(), p).unwrap();
        let parts = norms::lp_norm(&f, p).unwrap() + norms::lp_norm(&g, p).unwrap();
        prop_assert!(sum <= parts * (1.0 + 1e-12));
    }

    #[test]
    fn poincare_holds_for_mean_free_fields(f in field_strategy()) {
        let f = f.mean_free();
        let k2 = f.grid().scale().powi(2);
        let r = norms::poincare_ratio(&f).unwrap();
        prop_assert!(r.grad_over_l2 >= k2 * (1.0 - 1e-12));
        prop_assert!(r.grad_over_h1 >= norms::poincare_constant(f.grid()) * (1.0 - 1e-12));
    }

    #[test]
    fn sobolev_norms_are_ordered(f in field_strategy()) {
        let h0 = norms::sobolev_norm_sq(&f, 0).unwrap();
        let h1 = norms::sobolev_norm_sq(&f, 1).unwrap();
        let h2 = norms::sobolev_norm_sq(&f, 2).unwrap();
        prop_assert!(h0 <= h1 && h1 <= h2);
    }

    #[test]
    fn cubic_quadrature_is_exact_on_cubics(
        c in prop::array::uniform4(-2.0f64..2.0),
        n in 4usize..40,
        span in 0.1f64..5.0,
    ) {
        let times: Vec<f64> = (0..=n).map(|i| span * i as f64 / n as f64).collect();
        let f = |t: f64| c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let exact = c[0] * span + c[1] * span.powi(2) / 2.0 + c[2] * span.powi(3) / 3.0
            + c[3] * span.powi(4) / 4.0;
        let got = quadrature::integrate(&times, &values, QuadratureRule::Cubic);
        prop_assert!((got - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        let s = Series::new(times.clone(), values);
        let t = span * 0.37;
        prop_assert!((s.at(t) - f(t)).abs() <= 1e-10 * (1.0 + f(t).abs()));
    }

    #[test]
    fn contraction_decreases_with_alpha(a in 0.0f64..1.0, b in 0.0f64..1.0, s in 0.01f64..4.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(conditions::contraction(lo, 4.0, s) >= conditions::contraction(hi, 4.0, s));
        prop_assert!(
            conditions::contraction_measured(lo, s, 4.0, s) >= conditions::contraction_measured(hi, s, 4.0, s)
        );
    }

    #[test]
    fn linear_envelope_dominates_subsolutions(
        a in 0.0f64..0.2,
        g in 0.0f64..1e-3,
        x0 in 1e-4f64..1e-2,
        slack in 0.0f64..0.5,
    ) {
        // X' = (A² − c*/2 − slack)X + G² stays below the envelope.
        let constants = StabilityConstants { c1: 0.5, c3: 0.02, c4: 2.0 / 3.0, c5: 40.0 };
        let budget = StabilityBudget::new(1.0, 4.0, 0.04, 0.2, constants, None).unwrap();
        let n = 400;
        let dt = 4.0 / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let rate = a - budget.c_star / 2.0 - slack;
        let x_sq: Vec<f64> = times
            .iter()
            .map(|t| {
                if rate.abs() < 1e-12 {
                    x0 + g * t
                } else {
                    (x0 + g / rate) * (rate * t).exp() - g / rate
                }
            })
            .collect();
        let series = StabilitySeries {
            window_index: 0,
            t0: 0.0,
            t1: 4.0,
            times: times.clone(),
            y_sq: x_sq.clone(),
            a_sq: vec![a; n + 1],
            g_sq: vec![g; n + 1],
            z_sq: x_sq.iter().zip(&times).map(|(x, t)| x * (-a * t).exp()).collect(),
            int_a_sq: times.iter().map(|t| a * t).collect(),
            int_g_sq: times.iter().map(|t| g * t).collect(),
            x_sq,
        };
        let env = gronwall_envelope(&series, &budget);
        for (x, w) in series.x_sq.iter().zip(&env.linear) {
            prop_assert!(*x <= w * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn config_round_trips(
        nu in 0.01f64..2.0,
        dt_exp in 2u32..4,
        windows in 1usize..6,
        n in prop::sample::select(vec![8usize, 16]),
        seed in any::<u64>(),
        amp in -1.0f64..1.0,
    ) {
        let text = format!(
            "name = \"p\"\nseed = {seed}\nnu = {nu:?}\ndt = 1e-{dt_exp}\nwindows = {windows}\n\
             [grid]\nn = {n}\n[base.forcing]\nkind = \"modes\"\n\
             modes = [{{ amplitude = [{amp:?}, 0.0, 0.0], wave = [0, 1, 0] }}]\n"
        );
        let spec: ExperimentSpec = parse_config(&text).unwrap();
        let again = parse_config(&spec.to_toml()).unwrap();
        prop_assert_eq!(&spec, &again);
        prop_assert_eq!(spec.to_toml(), again.to_toml());
    }
}

#[test]
fn lowest_mode_is_sharp_for_any_box() {
    for l in [0.7, 1.0, 2.0 * PI, 9.0] {
        let g = TorusGrid::new(l, 8, 3).unwrap();
        let k = g.scale();
        let f = Field::from_fn(g, 3, |x| [0.0, 0.0, (k * x[1]).cos()]).unwrap();
        let r = norms::poincare_ratio(&f).unwrap();
        assert!((r.grad_over_l2 - k * k).abs() <= 1e-12 * k * k);
    }
}
