//! Sampled control envelopes on uniform time grids, with linear
//! interpolation, time reversal, and quadrature helpers. Used for coupling
//! schedules that are *constructed* numerically (rather than given in
//! closed form) and for tabulated CSV output.

use crate::error::{QopError, Result};
use crate::ode::{simpson_cumulative, simpson_integral};

/// A real-valued envelope sampled on a uniform grid starting at `t0` with
/// spacing `dt`. Evaluation clamps to the end samples outside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseProfile {
    t0: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl PulseProfile {
    pub fn from_samples(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(QopError::Domain("a pulse needs at least two samples".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(QopError::Domain("pulse grid must be finite with dt > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(QopError::Domain("pulse samples must be finite".into()));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Samples `f` at `n` uniformly spaced points spanning [t0, t1].
    pub fn from_fn<F: Fn(f64) -> f64>(t0: f64, t1: f64, n: usize, f: F) -> Result<Self> {
        if n < 2 || !(t1 > t0) {
            return Err(QopError::Domain("need n ≥ 2 samples and t1 > t0".into()));
        }
        let dt = (t1 - t0) / (n as f64 - 1.0);
        let samples = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::from_samples(t0, dt, samples)
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.samples.len() as f64 - 1.0)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires ≥ 2 samples
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|i| self.t0 + i as f64 * self.dt).collect()
    }

    /// Linearly interpolated value; clamped to the first/last sample
    /// outside the window.
    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if x >= last as f64 {
            return self.samples[last];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    /// The time-reversed envelope on the same grid: the new profile's value
    /// at t is the old value at (t_start + t_end − t).
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { t0: self.t0, dt: self.dt, samples }
    }

    /// ∫ f(t) dt over the window.
    pub fn integral(&self) -> Result<f64> {
        simpson_integral(&self.samples, self.dt)
    }

    /// ∫ f(t)² dt over the window.
    pub fn squared_integral(&self) -> Result<f64> {
        let sq: Vec<f64> = self.samples.iter().map(|s| s * s).collect();
        simpson_integral(&sq, self.dt)
    }

    /// Cumulative ∫ f² up to each grid point.
    pub fn squared_cumulative(&self) -> Result<Vec<f64>> {
        let sq: Vec<f64> = self.samples.iter().map(|s| s * s).collect();
        simpson_cumulative(&sq, self.dt)
    }

    /// Largest |f(t)| on the grid.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Maximum |value difference| against another profile on this grid.
    pub fn max_deviation_from(&self, other: &PulseProfile) -> f64 {
        self.times()
            .iter()
            .zip(&self.samples)
            .fold(0.0, |m, (&t, &s)| m.max((s - other.value(t)).abs()))
    }
}
