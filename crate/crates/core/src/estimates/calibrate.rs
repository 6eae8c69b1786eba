//! Numerical values of the functional-inequality constants.
//!
//! `c₁` and `c₄` are the sharp Poincaré and dissipation constants of the
//! torus. `c₃` (the `H¹ ⊂ L₆` embedding) is probed empirically as the largest
//! ratio `‖ū‖²_{L₆}/‖ū‖²_{H¹}` seen over a seeded random ensemble.
//!
//! `c₅` collects the Young-inequality coefficients of the `H¹` energy
//! estimate. Writing `S = ‖∇v̄‖_{L₃}`, `F = ‖ḡ‖`, `m` for the mean of `u` and
//! `|Ω|` for the box volume, the nonlinear and forcing terms are bounded by
//!
//! * `2c₃^{3/4} X^{3/2} Y^{3/2} ≤ νβ_a Y² + 27c₃³X⁶/(16β_a³ν³)`,
//! * three terms `2√c₃ S X Y ≤ νβ_b Y² + c₃S²X²/(β_b ν)`,
//! * two terms `2|Ω|^{1/6}|m| S Y ≤ νβ_m Y² + |Ω|^{1/3}|m|²S²/(β_m ν)`,
//! * `2√2 F Y ≤ νβ_f Y² + 2F²/(β_f ν)`,
//!
//! with `β_a + 3β_b + 2β_m + β_f = c_D` absorbed by half of the dissipation
//! `2νc_D Y²`. `c₅` is the smallest value for which every group coefficient
//! is at most `c₅`, and `c₄ = c_D`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::field::random_divfree_field;
use crate::grid::TorusGrid;
use crate::norms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub c1: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constants: StabilityConstants,
    /// Running maximum of the embedding ratio over the ensemble.
    pub c3_history: Vec<f64>,
    pub seed: u64,
}

/// Spectral decay exponents cycled through by the ensemble.
const DECAYS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

/// Smallest `c₅` compatible with the dissipation budget `c_D`.
pub fn young_constant(c3: f64, c_dissipation: f64, volume: f64) -> f64 {
    let linear = 9.0 * c3 + 4.0 * volume.cbrt() + 2.0;
    let excess = |c5: f64| (27.0 * c3.powi(3) / (16.0 * c5)).cbrt() + linear / c5 - c_dissipation;
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn constants_from_c3(grid: &TorusGrid, c3: f64) -> StabilityConstants {
    let g3 = grid.with_dim(3).expect("valid grid");
    let c_d = norms::dissipation_constant(&g3);
    StabilityConstants {
        c1: norms::poincare_constant(&g3),
        c3,
        c4: c_d,
        c5: young_constant(c3, c_d, g3.volume()),
    }
}

pub fn calibrate_constants(
    grid: &TorusGrid,
    samples: usize,
    seed: u64,
) -> Result<Calibration, FieldError> {
    let g3 = grid.with_dim(3)?;
    let ratios: Vec<f64> = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let f =
                random_divfree_field(&g3, seed.wrapping_add(i as u64), DECAYS[i % DECAYS.len()])?;
            norms::embedding_ratio_l6_h1(&f.mean_free())
        })
        .collect::<Result<_, _>>()?;
    let mut running = 0.0f64;
    let c3_history: Vec<f64> = ratios
        .iter()
        .map(|r| {
            running = running.max(*r);
            running
        })
        .collect();
    Ok(Calibration {
        constants: constants_from_c3(&g3, running),
        c3_history,
        seed,
    })
}

/// Default `c* = 0.9 νc₄`.
pub fn default_c_star(nu: f64, constants: &StabilityConstants) -> f64 {
    0.9 * nu * constants.c4
}

/// Largest `γ*` with `νc₄ − c₅γ*²/ν³ ≥ c*/2`.
pub fn gamma_star(nu: f64, constants: &StabilityConstants, c_star: f64) -> f64 {
    ((nu * constants.c4 - c_star / 2.0).max(0.0) * nu.powi(3) / constants.c5).sqrt()
}
