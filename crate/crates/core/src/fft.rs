//! Real-to-complex transforms on the torus grid.
//!
//! Forward transforms are normalised by `1/N^d`, so coefficient `(0, .., 0)`
//! is the box average. The inverse takes the real part of the Hermitian
//! extension, which projects inconsistent half spectra onto real fields.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::TorusGrid;

type PlanKey = (usize, bool);

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Complex FFT along one full (non-last) axis of a half-storage array, in place.
fn transform_full_axis(grid: &TorusGrid, data: &mut [Complex64], axis: usize, inverse: bool) {
    let n = grid.n();
    let h = grid.half();
    // Strides in half storage: the last axis has length h, the others n.
    let (outer, stride, inner) = match (grid.dim(), axis) {
        (2, 0) => (1, h, h),
        (3, 0) => (1, n * h, n * h),
        (3, 1) => (n, h, h),
        _ => unreachable!("axis {axis} is not a full axis"),
    };
    let block = n * stride;
    let lines = outer * inner;
    let mut buf = vec![Complex64::default(); lines * n];
    for o in 0..outer {
        for i in 0..inner {
            let line = o * inner + i;
            for j in 0..n {
                buf[line * n + j] = data[o * block + j * stride + i];
            }
        }
    }
    plan(n, inverse).process(&mut buf);
    for o in 0..outer {
        for i in 0..inner {
            let line = o * inner + i;
            for j in 0..n {
                data[o * block + j * stride + i] = buf[line * n + j];
            }
        }
    }
}

/// Physical values to half-storage coefficients.
pub fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    let h = grid.half();
    debug_assert_eq!(values.len(), grid.physical_len());
    let lines = values.len() / n;
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let norm = 1.0 / grid.physical_len() as f64;
    let mut out = vec![Complex64::default(); lines * h];
    for l in 0..lines {
        for j in 0..h {
            out[l * h + j] = buf[l * n + j] * norm;
        }
    }
    for axis in (0..grid.dim() - 1).rev() {
        transform_full_axis(grid, &mut out, axis, false);
    }
    out
}

/// Half-storage coefficients to physical values.
pub fn inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.half();
    debug_assert_eq!(coeffs.len(), grid.spectral_len());
    let mut work = coeffs.to_vec();
    for axis in 0..grid.dim() - 1 {
        transform_full_axis(grid, &mut work, axis, true);
    }
    let lines = work.len() / h;
    let mut buf = vec![Complex64::default(); lines * n];
    for l in 0..lines {
        let src = &work[l * h..(l + 1) * h];
        let dst = &mut buf[l * n..(l + 1) * n];
        dst[..h].copy_from_slice(src);
        for j in 1..n / 2 {
            dst[n - j] = src[j].conj();
        }
    }
    plan(n, true).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Embed half-storage coefficients of `grid` into the half storage of the
/// finer grid `fine` (same box, more points). Nyquist coefficients are split
/// evenly between `±N/2`, so the result is the trigonometric interpolant.
pub fn pad(grid: &TorusGrid, coeffs: &[Complex64], fine: &TorusGrid) -> Vec<Complex64> {
    assert!(fine.n() >= grid.n() && fine.dim() == grid.dim());
    let dim = grid.dim();
    let mut out = vec![Complex64::default(); fine.spectral_len()];
    if fine.n() == grid.n() {
        out.copy_from_slice(coeffs);
        return out;
    }
    let half_n = grid.n() as i64 / 2;
    for (idx, &c) in coeffs.iter().enumerate() {
        let modes = grid.spectral_modes(idx);
        let last = modes[dim - 1];
        // Self-paired planes of the half axis: use the Hermitian-symmetrised value.
        let value = if last == 0 || last == -half_n {
            let neg = [-modes[0], -modes[1], -modes[2]];
            let mut neg = neg;
            for m in neg.iter_mut().take(dim) {
                if *m == half_n {
                    *m = -half_n;
                }
            }
            let partner = coeffs[grid.spectral_index(neg).expect("partner mode stored")];
            0.5 * (c + partner.conj())
        } else {
            c
        };
        if value == Complex64::default() {
            continue;
        }
        // Full axes carrying the Nyquist mode get split in two.
        let split_axes: Vec<usize> = (0..dim - 1).filter(|&a| modes[a] == -half_n).collect();
        let mut weight = 0.5f64.powi(split_axes.len() as i32);
        let mut target = modes;
        if last == -half_n {
            // The +N/2 copy is stored; its conjugate partner at -N/2 is implied.
            target[dim - 1] = half_n;
            weight *= 0.5;
        }
        for choice in 0..(1usize << split_axes.len()) {
            let mut t = target;
            for (bit, &a) in split_axes.iter().enumerate() {
                t[a] = if choice >> bit & 1 == 1 {
                    half_n
                } else {
                    -half_n
                };
            }
            let fidx = fine.spectral_index(t).expect("mode fits the fine grid");
            out[fidx] += value * weight;
        }
    }
    out
}
