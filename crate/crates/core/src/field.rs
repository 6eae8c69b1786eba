//! Periodic scalar and vector fields in physical or spectral form, and the
//! modewise operators acting on them.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::fft;
use crate::grid::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Physical(Vec<Vec<f64>>),
    Spectral(Vec<Vec<Complex64>>),
}

/// A real periodic field with one (scalar) or `dim` (vector) components.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    data: FieldData,
    divergence_free: bool,
    time: f64,
}

/// Spatial average of a field, padded to three components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVector {
    pub value: [f64; 3],
    pub time: f64,
}

impl MeanVector {
    pub fn norm(&self) -> f64 {
        self.value.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Field {
    pub fn from_physical(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        for c in &comps {
            if c.len() != grid.physical_len() {
                return Err(FieldError::LengthMismatch {
                    expected: grid.physical_len(),
                    found: c.len(),
                });
            }
        }
        check_components(&grid, comps.len())?;
        Ok(Field {
            grid,
            data: FieldData::Physical(comps),
            divergence_free: false,
            time: 0.0,
        })
    }

    pub fn from_spectral(grid: TorusGrid, comps: Vec<Vec<Complex64>>) -> Result<Self, FieldError> {
        for c in &comps {
            if c.len() != grid.spectral_len() {
                return Err(FieldError::LengthMismatch {
                    expected: grid.spectral_len(),
                    found: c.len(),
                });
            }
        }
        check_components(&grid, comps.len())?;
        Ok(Field {
            grid,
            data: FieldData::Spectral(comps),
            divergence_free: false,
            time: 0.0,
        })
    }

    /// Sample `f(x)` at the collocation points; `f` returns up to three components.
    pub fn from_fn<F>(grid: TorusGrid, ncomp: usize, f: F) -> Result<Self, FieldError>
    where
        F: Fn([f64; 3]) -> [f64; 3],
    {
        check_components(&grid, ncomp)?;
        let mut comps = vec![vec![0.0; grid.physical_len()]; ncomp];
        for i in 0..grid.physical_len() {
            let v = f(grid.coordinates(i));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[i] = v[c];
            }
        }
        Field::from_physical(grid, comps)
    }

    pub fn zeros(grid: TorusGrid, ncomp: usize) -> Self {
        Field {
            grid,
            data: FieldData::Spectral(vec![vec![Complex64::default(); grid.spectral_len()]; ncomp]),
            divergence_free: ncomp == grid.dim(),
            time: 0.0,
        }
    }

    pub fn zero_vector(grid: TorusGrid) -> Self {
        Field::zeros(grid, grid.dim())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        match &self.data {
            FieldData::Physical(c) => c.len(),
            FieldData::Spectral(c) => c.len(),
        }
    }

    pub fn is_vector(&self) -> bool {
        self.ncomp() == self.grid.dim()
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            FieldData::Physical(_) => Representation::Physical,
            FieldData::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    /// Whether the field has been flagged divergence free (by projection or
    /// construction). See [`Field::divergence`] for the measured value.
    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn set_divergence_free(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    pub fn transform(&self, target: Representation) -> Field {
        if self.representation() == target {
            return self.clone();
        }
        let data = match (&self.data, target) {
            (FieldData::Physical(c), Representation::Spectral) => {
                FieldData::Spectral(c.iter().map(|v| fft::forward(&self.grid, v)).collect())
            }
            (FieldData::Spectral(c), Representation::Physical) => {
                FieldData::Physical(c.iter().map(|v| fft::inverse(&self.grid, v)).collect())
            }
            _ => unreachable!(),
        };
        Field {
            grid: self.grid,
            data,
            divergence_free: self.divergence_free,
            time: self.time,
        }
    }

    pub fn to_spectral(&self) -> Field {
        self.transform(Representation::Spectral)
    }

    pub fn to_physical(&self) -> Field {
        self.transform(Representation::Physical)
    }

    /// Spectral coefficients, converting if needed.
    pub fn spectral(&self) -> std::borrow::Cow<'_, [Vec<Complex64>]> {
        match &self.data {
            FieldData::Spectral(c) => std::borrow::Cow::Borrowed(c.as_slice()),
            FieldData::Physical(c) => {
                std::borrow::Cow::Owned(c.iter().map(|v| fft::forward(&self.grid, v)).collect())
            }
        }
    }

    /// Physical values, converting if needed.
    pub fn physical(&self) -> std::borrow::Cow<'_, [Vec<f64>]> {
        match &self.data {
            FieldData::Physical(c) => std::borrow::Cow::Borrowed(c.as_slice()),
            FieldData::Spectral(c) => {
                std::borrow::Cow::Owned(c.iter().map(|v| fft::inverse(&self.grid, v)).collect())
            }
        }
    }

    /// Mutable spectral coefficients; converts the field in place first.
    pub fn spectral_mut(&mut self) -> &mut Vec<Vec<Complex64>> {
        if let FieldData::Physical(_) = self.data {
            *self = self.to_spectral();
        }
        match &mut self.data {
            FieldData::Spectral(c) => c,
            FieldData::Physical(_) => unreachable!(),
        }
    }

    pub fn into_spectral(self) -> Vec<Vec<Complex64>> {
        match self.to_spectral().data {
            FieldData::Spectral(c) => c,
            FieldData::Physical(_) => unreachable!(),
        }
    }

    fn map_spectral<F>(&self, mut f: F) -> Field
    where
        F: FnMut(usize, usize, Complex64) -> Complex64,
    {
        let comps = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(c, v)| v.iter().enumerate().map(|(i, &z)| f(c, i, z)).collect())
            .collect();
        Field {
            grid: self.grid,
            data: FieldData::Spectral(comps),
            divergence_free: self.divergence_free,
            time: self.time,
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map_spectral(|_, _, z| z * a)
    }

    pub fn add(&self, other: &Field) -> Result<Field, FieldError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, FieldError> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field, FieldError> {
        self.check_compatible(other)?;
        let o = other.spectral();
        let mut out = self.map_spectral(|c, i, z| z + o[c][i] * a);
        out.divergence_free = self.divergence_free && other.divergence_free;
        Ok(out)
    }

    pub fn check_compatible(&self, other: &Field) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        if self.ncomp() != other.ncomp() {
            return Err(FieldError::ComponentMismatch {
                expected: self.ncomp(),
                found: other.ncomp(),
            });
        }
        Ok(())
    }

    /// One component as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        let data = match &self.data {
            FieldData::Physical(v) => FieldData::Physical(vec![v[c].clone()]),
            FieldData::Spectral(v) => FieldData::Spectral(vec![v[c].clone()]),
        };
        Field {
            grid: self.grid,
            data,
            divergence_free: false,
            time: self.time,
        }
    }

    /// `∂^order / ∂x_axis^order`, exactly in Fourier space. First derivatives
    /// drop the Nyquist mode of the differentiated axis so the result stays real.
    pub fn derivative(&self, axis: usize, order: u32) -> Result<Field, FieldError> {
        if axis >= self.grid.dim() {
            return Err(FieldError::BadAxis {
                axis,
                dim: self.grid.dim(),
            });
        }
        if order != 1 && order != 2 {
            return Err(FieldError::BadOrder(order));
        }
        let mult = derivative_multipliers(&self.grid, axis, order);
        let mut out = self.map_spectral(|_, i, z| z * mult[i]);
        out.divergence_free = self.divergence_free;
        Ok(out)
    }

    /// All first derivatives: entry `[c][a]` is `∂_a` of component `c`.
    pub fn gradient(&self) -> Vec<Vec<Field>> {
        (0..self.ncomp())
            .map(|c| {
                let comp = self.component(c);
                (0..self.grid.dim())
                    .map(|a| comp.derivative(a, 1).expect("axis in range"))
                    .collect()
            })
            .collect()
    }

    pub fn laplacian(&self) -> Field {
        let k2 = laplacian_symbol(&self.grid);
        let mut out = self.map_spectral(|_, i, z| -z * k2[i]);
        out.divergence_free = self.divergence_free;
        out
    }

    /// Scalar divergence `Σ_a ∂_a v_a` (spectral).
    pub fn divergence(&self) -> Result<Field, FieldError> {
        if !self.is_vector() {
            return Err(FieldError::ComponentMismatch {
                expected: self.grid.dim(),
                found: self.ncomp(),
            });
        }
        let spec = self.spectral();
        let dim = self.grid.dim();
        let mults: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| derivative_multipliers(&self.grid, a, 1))
            .collect();
        let out: Vec<Complex64> = (0..self.grid.spectral_len())
            .map(|i| (0..dim).map(|a| mults[a][i] * spec[a][i]).sum())
            .collect();
        Ok(Field {
            grid: self.grid,
            data: FieldData::Spectral(vec![out]),
            divergence_free: false,
            time: self.time,
        })
    }

    /// `max_k |i k · v̂(k)| / max(max_k |k| |v̂(k)|, tiny)`: zero for an
    /// exactly solenoidal field, of order one for a generic one.
    pub fn relative_divergence(&self) -> Result<f64, FieldError> {
        let div = self.divergence()?;
        let dmax = div.spectral()[0]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let k2 = laplacian_symbol(&self.grid);
        let spec = self.spectral();
        let mut vmax: f64 = 0.0;
        for i in 0..self.grid.spectral_len() {
            let amp: f64 = spec.iter().map(|c| c[i].norm_sqr()).sum::<f64>().sqrt();
            vmax = vmax.max(k2[i].sqrt() * amp);
        }
        if vmax == 0.0 {
            return Ok(0.0);
        }
        Ok(dmax / vmax)
    }

    /// Leray projection `v̂ ← v̂ − k (k·v̂)/|k|²` for `k ≠ 0`; the zero mode is untouched.
    pub fn leray_project(&self) -> Result<Field, FieldError> {
        if !self.is_vector() {
            return Err(FieldError::ComponentMismatch {
                expected: self.grid.dim(),
                found: self.ncomp(),
            });
        }
        let dim = self.grid.dim();
        let k = effective_wavevectors(&self.grid);
        let mut comps = self.spectral().into_owned();
        for i in 0..self.grid.spectral_len() {
            let kv = &k[i * dim..(i + 1) * dim];
            let k2: f64 = kv.iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                continue;
            }
            let dot: Complex64 = (0..dim).map(|a| comps[a][i] * kv[a]).sum();
            let s = dot / k2;
            for a in 0..dim {
                comps[a][i] -= s * kv[a];
            }
        }
        Ok(Field {
            grid: self.grid,
            data: FieldData::Spectral(comps),
            divergence_free: true,
            time: self.time,
        })
    }

    /// Two-thirds rule: zero every mode with some `|m_a| > N/3`.
    pub fn dealias(&self) -> Field {
        let mask = dealias_mask(&self.grid);
        self.map_spectral(|_, i, z| if mask[i] { z } else { Complex64::default() })
    }

    pub fn mean(&self) -> MeanVector {
        let mut value = [0.0; 3];
        for (c, v) in self.spectral().iter().enumerate().take(3) {
            value[c] = v[0].re;
        }
        MeanVector {
            value,
            time: self.time,
        }
    }

    pub fn mean_free(&self) -> Field {
        self.map_spectral(|_, i, z| if i == 0 { Complex64::default() } else { z })
    }

    /// Replace the zero-mode coefficients by the given mean.
    pub fn with_mean(&self, mean: &[f64; 3]) -> Field {
        self.map_spectral(|c, i, z| {
            if i == 0 {
                Complex64::new(mean[c], 0.0)
            } else {
                z
            }
        })
    }

    /// Largest pointwise difference from `other` in physical space.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64, FieldError> {
        self.check_compatible(other)?;
        let a = self.physical();
        let b = other.physical();
        Ok(a.iter()
            .zip(b.iter())
            .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.physical()
            .iter()
            .flat_map(|c| c.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            FieldData::Physical(c) => c.iter().all(|v| v.iter().all(|x| x.is_finite())),
            FieldData::Spectral(c) => c
                .iter()
                .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite())),
        }
    }

    /// Lift an `x₃`-invariant two-dimensional field to the three-dimensional
    /// box; vector fields gain a zero third component.
    pub fn lift_to_3d(&self) -> Result<Field, FieldError> {
        if self.grid.dim() != 2 {
            return Err(FieldError::NotTwoDimensional);
        }
        let g3 = self.grid.with_dim(3)?;
        let n = self.grid.n() as i64;
        let spec = self.spectral();
        let mut comps = vec![vec![Complex64::default(); g3.spectral_len()]; spec.len()];
        for (c, src) in spec.iter().enumerate() {
            for m0 in -n / 2..n / 2 {
                for m1 in -n / 2..n / 2 {
                    // 2D half storage keeps m1 >= 0 (and the Nyquist index).
                    let z = match self.grid.spectral_index([m0, m1, 0]) {
                        Some(i) => src[i],
                        None => src[self
                            .grid
                            .spectral_index([wrap_mode(-m0, n), -m1, 0])
                            .expect("conjugate partner stored")]
                        .conj(),
                    };
                    let dst = g3.spectral_index([m0, m1, 0]).expect("plane stored");
                    comps[c][dst] = z;
                }
            }
        }
        if self.is_vector() {
            comps.push(vec![Complex64::default(); g3.spectral_len()]);
        }
        Ok(Field {
            grid: g3,
            data: FieldData::Spectral(comps),
            divergence_free: self.divergence_free,
            time: self.time,
        })
    }
}

fn wrap_mode(m: i64, n: i64) -> i64 {
    if m >= n / 2 {
        m - n
    } else {
        m
    }
}

fn check_components(grid: &TorusGrid, ncomp: usize) -> Result<(), FieldError> {
    if ncomp == 1 || ncomp == grid.dim() {
        Ok(())
    } else {
        Err(FieldError::ComponentMismatch {
            expected: grid.dim(),
            found: ncomp,
        })
    }
}

/// Per-mode multiplier of `∂^order/∂x_axis^order` in half storage.
pub fn derivative_multipliers(grid: &TorusGrid, axis: usize, order: u32) -> Vec<Complex64> {
    let s = grid.scale();
    (0..grid.spectral_len())
        .map(|i| {
            let m = grid.spectral_modes(i)[axis];
            let k = s * m as f64;
            match order {
                1 if grid.is_nyquist(m) => Complex64::default(),
                1 => Complex64::new(0.0, k),
                _ => Complex64::new(-k * k, 0.0),
            }
        })
        .collect()
}

/// `|k|²` per mode (the symbol of `−Δ`).
pub fn laplacian_symbol(grid: &TorusGrid) -> Vec<f64> {
    let s = grid.scale();
    (0..grid.spectral_len())
        .map(|i| {
            let m = grid.spectral_modes(i);
            m[..grid.dim()]
                .iter()
                .map(|&x| (s * x as f64).powi(2))
                .sum()
        })
        .collect()
}

/// Wavevectors as seen by first derivatives (Nyquist components zeroed),
/// flattened `dim` entries per mode.
pub fn effective_wavevectors(grid: &TorusGrid) -> Vec<f64> {
    let s = grid.scale();
    let dim = grid.dim();
    let mut out = Vec::with_capacity(grid.spectral_len() * dim);
    for i in 0..grid.spectral_len() {
        let m = grid.spectral_modes(i);
        for &x in &m[..dim] {
            out.push(if grid.is_nyquist(x) {
                0.0
            } else {
                s * x as f64
            });
        }
    }
    out
}

pub fn dealias_mask(grid: &TorusGrid) -> Vec<bool> {
    let cut = grid.dealias_cutoff();
    (0..grid.spectral_len())
        .map(|i| {
            grid.spectral_modes(i)[..grid.dim()]
                .iter()
                .all(|m| m.abs() <= cut)
        })
        .collect()
}

/// Reproducible random solenoidal, mean-free vector field. Each retained
/// mode has a Gaussian amplitude scaled by `|k|^(-decay)`; modes beyond the
/// two-thirds cutoff and Nyquist modes are left empty.
pub fn random_divfree_field(grid: &TorusGrid, seed: u64, decay: f64) -> Result<Field, FieldError> {
    if !(decay.is_finite() && decay > 0.0) {
        return Err(FieldError::BadDecay(decay));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mask = dealias_mask(grid);
    let k2 = laplacian_symbol(grid);
    let dim = grid.dim();
    let mut comps = vec![vec![Complex64::default(); grid.spectral_len()]; dim];
    for i in 0..grid.spectral_len() {
        // Draw for every slot so the stream does not depend on the mask.
        let draws: Vec<(f64, f64)> = (0..dim)
            .map(|_| {
                (
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        if i == 0 || !mask[i] {
            continue;
        }
        let amp = k2[i].powf(-decay / 2.0);
        for (c, (re, im)) in draws.into_iter().enumerate() {
            comps[c][i] = Complex64::new(re, im) * amp;
        }
    }
    // Round trip through physical space enforces Hermitian consistency.
    let field = Field::from_spectral(*grid, comps)?
        .to_physical()
        .to_spectral();
    let mut out = field.leray_project()?.mean_free();
    out.divergence_free = true;
    Ok(out)
}
