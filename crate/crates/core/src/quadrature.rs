//! Time quadrature and interpolation over sampled series.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Piecewise cubic through four neighbouring samples (uniform spacing).
    Cubic,
}

fn is_uniform(times: &[f64]) -> bool {
    if times.len() < 3 {
        return true;
    }
    let h = times[1] - times[0];
    times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300))
}

/// Running integral `∫_{t_0}^{t_i} f` at every sample.
pub fn cumulative(times: &[f64], values: &[f64], rule: QuadratureRule) -> Vec<f64> {
    assert_eq!(times.len(), values.len());
    let n = times.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let cubic = rule == QuadratureRule::Cubic && n >= 4 && is_uniform(times);
    for i in 0..n - 1 {
        let h = times[i + 1] - times[i];
        let piece = if cubic {
            if i == 0 {
                h * (9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3]) / 24.0
            } else if i == n - 2 {
                h * (values[n - 4] - 5.0 * values[n - 3]
                    + 19.0 * values[n - 2]
                    + 9.0 * values[n - 1])
                    / 24.0
            } else {
                h * (-values[i - 1] + 13.0 * values[i] + 13.0 * values[i + 1] - values[i + 2])
                    / 24.0
            }
        } else {
            0.5 * h * (values[i] + values[i + 1])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// `∫_{t_0}^{t_last} f`.
pub fn integrate(times: &[f64], values: &[f64], rule: QuadratureRule) -> f64 {
    cumulative(times, values, rule)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Index of the sample closest to `t`, if one lies within `tol`.
pub fn find_sample(times: &[f64], t: f64, tol: f64) -> Option<usize> {
    let pos = times.partition_point(|&s| s < t);
    [pos.checked_sub(1), Some(pos)]
        .into_iter()
        .flatten()
        .filter(|&i| i < times.len())
        .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
        .filter(|&i| (times[i] - t).abs() <= tol)
}

/// Lagrange weights for the (up to) four samples around `t`. Returns the
/// first index and the weights; exact hits collapse to a single weight.
pub fn cubic_weights(times: &[f64], t: f64) -> (usize, Vec<f64>) {
    let n = times.len();
    assert!(n > 0, "cannot interpolate an empty series");
    let span = (times[n - 1] - times[0]).abs().max(1.0);
    if let Some(i) = find_sample(times, t, 1e-12 * span) {
        return (i, vec![1.0]);
    }
    if n == 1 {
        return (0, vec![1.0]);
    }
    let pos = times.partition_point(|&s| s < t).clamp(1, n - 1);
    let width = n.min(4);
    let start = (pos as isize - 2).clamp(0, (n - width) as isize) as usize;
    let nodes = &times[start..start + width];
    let w = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &xm)| (t - xm) / (xj - xm))
                .product()
        })
        .collect();
    (start, w)
}

/// Cubic (four-point Lagrange) interpolation of a scalar series.
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let (start, w) = cubic_weights(times, t);
    w.iter()
        .enumerate()
        .map(|(j, wj)| wj * values[start + j])
        .sum()
}

/// Linear interpolation of a running integral at `t` (used for window edges
/// that fall between samples).
pub fn interpolate_linear(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let a = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] * (1.0 - a) + values[i + 1] * a
}
