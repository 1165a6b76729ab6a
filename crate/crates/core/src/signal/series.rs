use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled scalar signal.
///
/// `dt` is the sampling interval in seconds. Values are checked to be finite
/// on construction, so downstream code never has to re-check for NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSeries {
    values: Vec<f64>,
    dt: f64,
    unit: String,
}

impl SampledSeries {
    pub fn new(values: Vec<f64>, dt: f64, unit: impl Into<String>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling interval must be positive, got {dt}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            values,
            dt,
            unit: unit.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fs(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn require_len(&self, needed: usize) -> Result<()> {
        if self.values.len() < needed {
            Err(Error::TooShort {
                needed,
                got: self.values.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Same grid and unit, new values. Values are re-validated.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.dt, self.unit.clone())
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    /// Copy of samples `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.values.len() {
            return Err(Error::InvalidInput(format!(
                "slice {start}..={end} out of bounds for length {}",
                self.values.len()
            )));
        }
        Self::new(self.values[start..=end].to_vec(), self.dt, self.unit.clone())
    }

    pub fn min(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }
}

/// How the derivative series of a [`Trajectory`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// smooth -> central difference -> lowpass, see [`crate::signal::differentiate_pipeline`].
    Pipeline,
    /// Evaluated exactly along a numerically integrated model trajectory.
    Integrator,
    /// Supplied by the caller.
    Supplied,
}

/// Aligned state, velocity and acceleration for one recording.
///
/// Velocity is in state-units per sample and acceleration in state-units per
/// sample squared, where one sample lasts `sample_period` seconds. For ordinary
/// recordings `sample_period == state.dt()`; dense integrator output keeps the
/// per-sample units of the coarse grid while `state.dt()` is a fraction of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    state: SampledSeries,
    velocity: SampledSeries,
    acceleration: SampledSeries,
    sample_period: f64,
    provenance: Provenance,
}

impl Trajectory {
    pub fn new(
        state: SampledSeries,
        velocity: SampledSeries,
        acceleration: SampledSeries,
        provenance: Provenance,
    ) -> Result<Self> {
        let sample_period = state.dt();
        Self::with_sample_period(state, velocity, acceleration, sample_period, provenance)
    }

    pub fn with_sample_period(
        state: SampledSeries,
        velocity: SampledSeries,
        acceleration: SampledSeries,
        sample_period: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        for s in [&velocity, &acceleration] {
            if s.len() != state.len() {
                return Err(Error::LengthMismatch {
                    left: state.len(),
                    right: s.len(),
                });
            }
            if s.dt() != state.dt() {
                return Err(Error::InvalidInput(format!(
                    "sampling interval mismatch: {} vs {}",
                    state.dt(),
                    s.dt()
                )));
            }
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        Ok(Self {
            state,
            velocity,
            acceleration,
            sample_period,
            provenance,
        })
    }

    /// Build a trajectory from raw per-sample vectors on a grid of `dt` seconds.
    pub fn from_vecs(
        state: Vec<f64>,
        velocity: Vec<f64>,
        acceleration: Vec<f64>,
        dt: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        Self::new(
            SampledSeries::new(state, dt, "mm")?,
            SampledSeries::new(velocity, dt, "mm/sample")?,
            SampledSeries::new(acceleration, dt, "mm/sample^2")?,
            provenance,
        )
    }

    pub fn state(&self) -> &SampledSeries {
        &self.state
    }

    pub fn velocity(&self) -> &SampledSeries {
        &self.velocity
    }

    pub fn acceleration(&self) -> &SampledSeries {
        &self.acceleration
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.state.dt()
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// Grid spacing expressed in samples (1 for ordinary recordings).
    pub fn step_in_samples(&self) -> f64 {
        self.state.dt() / self.sample_period
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        Ok(Self {
            state: self.state.slice(start, end)?,
            velocity: self.velocity.slice(start, end)?,
            acceleration: self.acceleration.slice(start, end)?,
            sample_period: self.sample_period,
            provenance: self.provenance,
        })
    }

    /// Replace the acceleration series, keeping everything else.
    pub fn with_acceleration(&self, acceleration: Vec<f64>) -> Result<Self> {
        let acceleration = self.acceleration.with_values(acceleration)?;
        if acceleration.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: acceleration.len(),
            });
        }
        Ok(Self {
            acceleration,
            ..self.clone()
        })
    }
}

/// Per-sample rate (e.g. mm/sample, or r in 1/sample) to per-second.
pub fn per_sample_to_per_second(value: f64, sample_period: f64) -> f64 {
    value / sample_period
}

pub fn per_second_to_per_sample(value: f64, sample_period: f64) -> f64 {
    value * sample_period
}

/// mm/sample^2 to mm/s^2.
pub fn per_sample2_to_per_second2(value: f64, sample_period: f64) -> f64 {
    value / (sample_period * sample_period)
}
