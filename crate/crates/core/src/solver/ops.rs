//! Precomputed per-grid tables for the time-stepping kernels.

use num_complex::Complex64;

use crate::fft;
use crate::field::{dealias_mask, effective_wavevectors, laplacian_symbol};
use crate::grid::TorusGrid;

pub type Spectrum = Vec<Vec<Complex64>>;

#[derive(Debug, Clone)]
pub struct SpectralOps {
    grid: TorusGrid,
    k: Vec<f64>,
    k2: Vec<f64>,
    mask: Vec<bool>,
}

impl SpectralOps {
    pub fn new(grid: &TorusGrid) -> Self {
        SpectralOps {
            grid: *grid,
            k: effective_wavevectors(grid),
            k2: laplacian_symbol(grid),
            mask: dealias_mask(grid),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `|k|²` per mode.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn zeros(&self) -> Spectrum {
        vec![vec![Complex64::default(); self.grid.spectral_len()]; self.grid.dim()]
    }

    pub fn project(&self, comps: &mut [Vec<Complex64>]) {
        let dim = self.grid.dim();
        for i in 0..self.grid.spectral_len() {
            let kv = &self.k[i * dim..(i + 1) * dim];
            let k2: f64 = kv.iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                continue;
            }
            let mut dot = Complex64::default();
            for a in 0..dim {
                dot += comps[a][i] * kv[a];
            }
            let s = dot / k2;
            for a in 0..dim {
                comps[a][i] -= s * kv[a];
            }
        }
    }

    pub fn truncate(&self, comps: &mut [Vec<Complex64>]) {
        for c in comps.iter_mut() {
            for (z, &keep) in c.iter_mut().zip(&self.mask) {
                if !keep {
                    *z = Complex64::default();
                }
            }
        }
    }

    pub fn to_physical(&self, comps: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        comps.iter().map(|c| fft::inverse(&self.grid, c)).collect()
    }

    /// `−P ∂_a T_{ac}` for the symmetric tensor `T = w⊗w − b⊗b` built from
    /// physical velocities `w` (and optionally `b`), truncated to the
    /// two-thirds band. Missing trailing components of `b` count as zero.
    pub fn convective(&self, w: &[Vec<f64>], b: Option<&[Vec<f64>]>) -> Spectrum {
        let dim = self.grid.dim();
        let len = self.grid.physical_len();
        let mut out = self.zeros();
        let mut prod = vec![0.0; len];
        for a in 0..dim {
            for c in a..dim {
                for (p, (x, y)) in prod.iter_mut().zip(w[a].iter().zip(&w[c])) {
                    *p = x * y;
                }
                if let Some(b) = b {
                    if a < b.len() && c < b.len() {
                        for (p, (x, y)) in prod.iter_mut().zip(b[a].iter().zip(&b[c])) {
                            *p -= x * y;
                        }
                    }
                }
                let t = fft::forward(&self.grid, &prod);
                for i in 0..self.grid.spectral_len() {
                    let z = t[i];
                    out[c][i] -= Complex64::new(0.0, self.k[i * dim + a]) * z;
                    if a != c {
                        out[a][i] -= Complex64::new(0.0, self.k[i * dim + c]) * z;
                    }
                }
            }
        }
        self.truncate(&mut out);
        self.project(&mut out);
        out
    }
}

/// Repeat a planar physical array along the third axis.
pub fn broadcast_planar(grid3: &TorusGrid, planar: &[f64]) -> Vec<f64> {
    let n = grid3.n();
    (0..grid3.physical_len()).map(|i| planar[i / n]).collect()
}
