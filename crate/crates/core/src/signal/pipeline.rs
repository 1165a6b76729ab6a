use serde::{Deserialize, Serialize};

use super::butterworth::butterworth_lowpass;
use super::series::{Provenance, SampledSeries, Trajectory};
use super::smooth::{smooth, SmoothConfig};
use super::central_difference;
use crate::error::Result;

/// Lowpass settings for the derivative series. `None` skips filtering.
/// Velocity and acceleration cutoffs are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub order: usize,
    pub velocity_cutoff_hz: Option<f64>,
    pub acceleration_cutoff_hz: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            order: 5,
            velocity_cutoff_hz: Some(20.0),
            acceleration_cutoff_hz: Some(20.0),
        }
    }
}

impl FilterConfig {
    pub fn unfiltered() -> Self {
        Self {
            order: 5,
            velocity_cutoff_hz: None,
            acceleration_cutoff_hz: None,
        }
    }

    pub fn with_cutoff(cutoff_hz: f64) -> Self {
        Self {
            velocity_cutoff_hz: Some(cutoff_hz),
            acceleration_cutoff_hz: Some(cutoff_hz),
            ..Self::default()
        }
    }
}

fn lowpass(series: SampledSeries, cutoff: Option<f64>, order: usize) -> Result<SampledSeries> {
    match cutoff {
        Some(fc) => butterworth_lowpass(&series, fc, order),
        None => Ok(series),
    }
}

/// smooth -> central difference -> lowpass for velocity, then central
/// difference -> lowpass again for acceleration. The returned state is the
/// smoothed state; derivatives are per sample.
pub fn differentiate_pipeline(
    state: &SampledSeries,
    smooth_cfg: &SmoothConfig,
    filter_cfg: &FilterConfig,
) -> Result<Trajectory> {
    state.require_len(3)?;
    let smoothed = smooth(state, smooth_cfg)?;
    let velocity = lowpass(
        central_difference(&smoothed)?,
        filter_cfg.velocity_cutoff_hz,
        filter_cfg.order,
    )?;
    let acceleration = lowpass(
        central_difference(&velocity)?,
        filter_cfg.acceleration_cutoff_hz,
        filter_cfg.order,
    )?;
    Trajectory::new(smoothed, velocity, acceleration, Provenance::Pipeline)
}
