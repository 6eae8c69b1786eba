//! Second-order time steppers with exact or implicit viscous terms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ops::{SpectralOps, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    /// Exact viscous factor `e^{−ν|k|²dt}` with Heun for the rest.
    #[default]
    IntegratingFactor,
    /// Crank-Nicolson viscous term with Heun for the rest.
    Imex,
}

/// Everything except the viscous term: projected advection plus forcing.
pub trait Nonlinear {
    fn eval(&mut self, state: &Spectrum, t: f64) -> Spectrum;

    /// Box average of the force, which alone drives the zero mode.
    fn mean_forcing(&self, t: f64) -> [f64; 3];
}

#[derive(Debug, Clone)]
pub struct Stepper {
    ops: SpectralOps,
    dt: f64,
    scheme: TimeScheme,
    /// Propagator of the state over one step.
    decay: Vec<f64>,
    /// Weight of `dt · N` in the implicit update (unused by the exact factor).
    gain: Vec<f64>,
}

impl Stepper {
    pub fn new(ops: SpectralOps, nu: f64, dt: f64, scheme: TimeScheme) -> Self {
        let (decay, gain) = ops
            .k2()
            .iter()
            .map(|&k2| match scheme {
                TimeScheme::IntegratingFactor => ((-nu * k2 * dt).exp(), 1.0),
                TimeScheme::Imex => {
                    let h = 0.5 * nu * k2 * dt;
                    ((1.0 - h) / (1.0 + h), 1.0 / (1.0 + h))
                }
            })
            .unzip();
        Stepper {
            ops,
            dt,
            scheme,
            decay,
            gain,
        }
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `state` from `t` to `t + dt`.
    pub fn step<N: Nonlinear>(&self, state: &Spectrum, t: f64, rhs: &mut N) -> Spectrum {
        let dt = self.dt;
        let n0 = rhs.eval(state, t);
        let mut pred = self.ops.zeros();
        for c in 0..state.len() {
            for i in 0..state[c].len() {
                pred[c][i] = match self.scheme {
                    TimeScheme::IntegratingFactor => self.decay[i] * (state[c][i] + n0[c][i] * dt),
                    TimeScheme::Imex => {
                        self.decay[i] * state[c][i] + n0[c][i] * (self.gain[i] * dt)
                    }
                };
            }
        }
        let n1 = rhs.eval(&pred, t + dt);
        let mut next = pred;
        let h = 0.5 * dt;
        for c in 0..state.len() {
            for i in 0..state[c].len() {
                next[c][i] = match self.scheme {
                    TimeScheme::IntegratingFactor => {
                        self.decay[i] * (state[c][i] + n0[c][i] * h) + n1[c][i] * h
                    }
                    TimeScheme::Imex => {
                        self.decay[i] * state[c][i] + (n0[c][i] + n1[c][i]) * (self.gain[i] * h)
                    }
                };
            }
        }
        // Zero mode: Simpson's rule for the integral of the mean force.
        let (m0, mh, m1) = (
            rhs.mean_forcing(t),
            rhs.mean_forcing(t + h),
            rhs.mean_forcing(t + dt),
        );
        for c in 0..state.len() {
            let inc = dt / 6.0 * (m0[c] + 4.0 * mh[c] + m1[c]);
            next[c][0] = Complex64::new(state[c][0].re + inc, 0.0);
        }
        self.ops.truncate(&mut next);
        next
    }
}
