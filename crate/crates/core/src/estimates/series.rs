//! Sampled scalar series with window restriction and running integrals.

use crate::quadrature::{self, QuadratureRule};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        Series { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn slack(&self) -> f64 {
        let h = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        };
        1e-6 * h.abs()
    }

    pub fn at(&self, t: f64) -> f64 {
        quadrature::interpolate(&self.times, &self.values, t)
    }

    /// Samples in `[t0, t1]`, with cubically interpolated end points added
    /// when the window edges fall between samples.
    pub fn window(&self, t0: f64, t1: f64) -> Series {
        let eps = self.slack();
        let mut times = Vec::new();
        let mut values = Vec::new();
        if !self.times.iter().any(|&t| (t - t0).abs() <= eps) {
            times.push(t0);
            values.push(self.at(t0));
        }
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t >= t0 - eps && t <= t1 + eps {
                times.push(t);
                values.push(v);
            }
        }
        if !self.times.iter().any(|&t| (t - t1).abs() <= eps) {
            times.push(t1);
            values.push(self.at(t1));
        }
        Series { times, values }
    }

    /// Running integral from the first sample: each interval integrates the
    /// cubic through its four nearest samples (exact for cubics, any spacing).
    pub fn cumulative(&self) -> Vec<f64> {
        let n = self.len();
        if n < 4 {
            return quadrature::cumulative(&self.times, &self.values, QuadratureRule::Trapezoid);
        }
        // Three-point Gauss-Legendre on [-1, 1].
        let r = (0.6f64).sqrt();
        let gauss = [(-r, 5.0 / 9.0), (0.0, 8.0 / 9.0), (r, 5.0 / 9.0)];
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let start = i.saturating_sub(1).min(n - 4);
            let nodes = &self.times[start..start + 4];
            let vals = &self.values[start..start + 4];
            let (a, b) = (self.times[i], self.times[i + 1]);
            let half = 0.5 * (b - a);
            let mut piece = 0.0;
            for (x, w) in gauss {
                let t = a + half * (x + 1.0);
                let p: f64 = (0..4)
                    .map(|j| {
                        let l: f64 = (0..4)
                            .filter(|&m| m != j)
                            .map(|m| (t - nodes[m]) / (nodes[j] - nodes[m]))
                            .product();
                        l * vals[j]
                    })
                    .sum();
                piece += w * p;
            }
            out[i + 1] = out[i] + half * piece;
        }
        out
    }

    pub fn integral(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    /// `∫_{t0}^{t} f` for every sample `t` of `window(t0, t1)`, computed from
    /// the running integral of the whole series.
    pub fn window_cumulative(&self, t0: f64, t1: f64) -> Series {
        let cum = Series::new(self.times.clone(), self.cumulative());
        let w = cum.window(t0, t1);
        let base = cum.at(t0);
        let values = w.values.iter().map(|v| v - base).collect();
        Series {
            times: w.times,
            values,
        }
    }

    pub fn window_integral(&self, t0: f64, t1: f64) -> f64 {
        let cum = Series::new(self.times.clone(), self.cumulative());
        cum.at(t1) - cum.at(t0)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Series {
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| f(t, v))
            .collect();
        Series {
            times: self.times.clone(),
            values,
        }
    }
}

/// Analysis windows `[kT, (k+1)T]` that fit inside `[0, t_end]`.
pub fn windows(t_end: f64, window: f64) -> Vec<(usize, f64, f64)> {
    if window <= 0.0 || t_end <= 0.0 {
        return Vec::new();
    }
    let count = (t_end / window + 1e-9).floor() as usize;
    (0..count)
        .map(|k| (k, k as f64 * window, (k + 1) as f64 * window))
        .collect()
}
