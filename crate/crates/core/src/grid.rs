//! Discretisation of the periodic box `[0, L]^d`.
//!
//! Physical arrays are row-major with the last axis fastest. Spectral arrays
//! use Hermitian half storage along the last axis: `N^(d-1) * (N/2 + 1)`
//! complex coefficients, normalised so that the zero mode is the box mean.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::FieldError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    length: f64,
    n: usize,
    dim: usize,
}

impl TorusGrid {
    pub fn new(length: f64, n: usize, dim: usize) -> Result<Self, FieldError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        if n < 4 || n % 2 != 0 {
            return Err(FieldError::BadResolution(n));
        }
        if dim != 2 && dim != 3 {
            return Err(FieldError::BadDimension(dim));
        }
        Ok(TorusGrid { length, n, dim })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2π / L`, the wavenumber of the lowest nonzero mode.
    pub fn scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Lebesgue measure of the box, `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Number of stored coefficients along the last (half) axis.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn physical_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spectral_len(&self) -> usize {
        self.n.pow(self.dim as u32 - 1) * self.half()
    }

    /// Same box and resolution with a different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self, FieldError> {
        TorusGrid::new(self.length, self.n, dim)
    }

    /// Same box with a different number of points per side.
    pub fn with_n(&self, n: usize) -> Result<Self, FieldError> {
        TorusGrid::new(self.length, n, self.dim)
    }

    /// Integer mode numbers of a full axis in FFT order, each in `[-N/2, N/2)`.
    pub fn mode_numbers(&self) -> Vec<i64> {
        (0..self.n).map(|j| self.mode_of_index(j)).collect()
    }

    /// Wavenumbers `(2π/L) m` of a full axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let s = self.scale();
        self.mode_numbers()
            .into_iter()
            .map(|m| s * m as f64)
            .collect()
    }

    /// Mode number of an FFT index. Index `N/2` is the Nyquist mode `-N/2`.
    #[inline]
    pub fn mode_of_index(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    #[inline]
    pub fn is_nyquist(&self, m: i64) -> bool {
        m.unsigned_abs() as usize == self.n / 2
    }

    /// Integer modes of a spectral (half storage) index; unused axes are zero.
    pub fn spectral_modes(&self, idx: usize) -> [i64; 3] {
        let h = self.half();
        let last = idx % h;
        let mut out = [0i64; 3];
        let last_mode = if last == self.n / 2 {
            -(self.n as i64) / 2
        } else {
            last as i64
        };
        match self.dim {
            2 => {
                out[0] = self.mode_of_index(idx / h);
                out[1] = last_mode;
            }
            _ => {
                let rest = idx / h;
                out[0] = self.mode_of_index(rest / self.n);
                out[1] = self.mode_of_index(rest % self.n);
                out[2] = last_mode;
            }
        }
        out
    }

    /// Index into half storage of the given modes, if the mode is stored.
    /// Modes on the last axis must lie in `[0, N/2]` (or be the Nyquist mode).
    pub fn spectral_index(&self, modes: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let wrap = |m: i64| -> Option<usize> {
            if m < -n / 2 || m > n / 2 {
                None
            } else {
                Some(m.rem_euclid(n) as usize)
            }
        };
        let last = modes[self.dim - 1];
        let last = if last == -n / 2 { n / 2 } else { last };
        if !(0..=n / 2).contains(&last) {
            return None;
        }
        let h = self.half();
        match self.dim {
            2 => Some(wrap(modes[0])? * h + last as usize),
            _ => Some((wrap(modes[0])? * self.n + wrap(modes[1])?) * h + last as usize),
        }
    }

    /// Multiplicity of a stored coefficient in the full spectrum: interior
    /// modes of the half axis stand for themselves and their conjugates.
    #[inline]
    pub fn hermitian_weight(&self, idx: usize) -> f64 {
        let last = idx % self.half();
        if last == 0 || last == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Cartesian coordinates of a physical index; unused axes are zero.
    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let n = self.n;
        match self.dim {
            2 => [(idx / n) as f64 * h, (idx % n) as f64 * h, 0.0],
            _ => [
                (idx / (n * n)) as f64 * h,
                ((idx / n) % n) as f64 * h,
                (idx % n) as f64 * h,
            ],
        }
    }

    /// Largest mode magnitude kept by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }
}
