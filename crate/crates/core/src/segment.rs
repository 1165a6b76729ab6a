//! Movement parsing, target extraction, exclusion flags and lambda series.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SampledSeries, Trajectory};
use crate::stats::{linear_regression, LinearFit};

pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Velocity changes sign (or touches zero) inside the movement window.
    NonMonotonic,
    /// Acceleration crosses zero more than once inside the window.
    MultiPeakVelocity,
}

impl Flag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::NonMonotonic => "non_monotonic",
            Flag::MultiPeakVelocity => "multi_peak_velocity",
        }
    }
}

/// One segmented constriction movement within a full recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementToken {
    id: String,
    trajectory: Trajectory,
    onset: usize,
    offset: usize,
    t_obs: f64,
    x0: f64,
    v0: f64,
    flags: BTreeSet<Flag>,
    meta: BTreeMap<String, String>,
}

impl MovementToken {
    /// Build a token from explicit landmarks; flags are computed here.
    pub fn new(
        id: impl Into<String>,
        trajectory: Trajectory,
        onset: usize,
        offset: usize,
        t_obs: f64,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        if onset >= offset || offset >= trajectory.len() {
            return Err(Error::InvalidInput(format!(
                "movement window {onset}..={offset} invalid for {} samples",
                trajectory.len()
            )));
        }
        if !t_obs.is_finite() {
            return Err(Error::InvalidInput("observed target is not finite".into()));
        }
        let mut flags = BTreeSet::new();
        if !check_monotonic(trajectory.velocity(), onset, offset) {
            flags.insert(Flag::NonMonotonic);
        }
        if accel_zero_crossings(trajectory.acceleration(), onset, offset) > 1 {
            flags.insert(Flag::MultiPeakVelocity);
        }
        Ok(Self {
            id: id.into(),
            x0: trajectory.state().values()[onset],
            v0: trajectory.velocity().values()[onset],
            trajectory,
            onset,
            offset,
            t_obs,
            flags,
            meta,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn onset(&self) -> usize {
        self.onset
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn window_len(&self) -> usize {
        self.offset - self.onset + 1
    }

    pub fn t_obs(&self) -> f64 {
        self.t_obs
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn flags(&self) -> &BTreeSet<Flag> {
        &self.flags
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.meta
    }

    /// The `[onset, offset]` slice of the recording.
    pub fn window(&self) -> Trajectory {
        self.trajectory
            .slice(self.onset, self.offset)
            .expect("window bounds checked on construction")
    }

    /// +1 when the state rises over the window, -1 when it falls.
    pub fn direction(&self) -> f64 {
        let x = self.trajectory.state().values();
        if x[self.offset] >= x[self.onset] {
            1.0
        } else {
            -1.0
        }
    }

    /// Most extreme state reached in the window in the movement direction.
    pub fn extreme_state(&self) -> f64 {
        let w = &self.trajectory.state().values()[self.onset..=self.offset];
        if self.direction() > 0.0 {
            w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            w.iter().copied().fold(f64::INFINITY, f64::min)
        }
    }

    /// Replace the observed target (e.g. with a known ground truth).
    pub fn with_t_obs(mut self, t_obs: f64) -> Self {
        self.t_obs = t_obs;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub threshold: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Parse the movement in `window`, extract its target and build the token.
pub fn segment_recording(
    id: impl Into<String>,
    trajectory: Trajectory,
    window: Range<usize>,
    config: &SegmentConfig,
    meta: BTreeMap<String, String>,
) -> Result<MovementToken> {
    let (onset, offset) = parse_movement(trajectory.velocity(), window, config.threshold)?;
    let t_obs = extract_target(trajectory.state(), trajectory.velocity(), offset)?;
    MovementToken::new(id, trajectory, onset, offset, t_obs, meta)
}

fn check_window(len: usize, window: &Range<usize>) -> Result<()> {
    if window.start >= window.end || window.end > len {
        return Err(Error::InvalidInput(format!(
            "window {}..{} empty or outside 0..{len}",
            window.start, window.end
        )));
    }
    Ok(())
}

/// Index and signed value of the largest `|v|` in `window` (earliest on ties).
pub fn find_velocity_peak(velocity: &SampledSeries, window: Range<usize>) -> Result<(usize, f64)> {
    check_window(velocity.len(), &window)?;
    let v = velocity.values();
    let mut best = window.start;
    for i in window {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    Ok((best, v[best]))
}

/// Onset and offset of the movement around the velocity peak in `window`.
///
/// Onset is the first sample in the window with `|v| >= threshold * |v_peak|`;
/// offset is the last sample of the run of such samples that starts at the
/// peak. Anything between onset and peak (including a reversal) stays in the
/// movement, so sign changes there are caught by [`check_monotonic`].
pub fn parse_movement(
    velocity: &SampledSeries,
    window: Range<usize>,
    threshold: f64,
) -> Result<(usize, usize)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let (start, end) = (window.start, window.end);
    let (peak, peak_v) = find_velocity_peak(velocity, window)?;
    if peak_v == 0.0 {
        return Err(Error::NoMovement);
    }
    let level = threshold * peak_v.abs();
    let v = velocity.values();
    let onset = (start..=peak).find(|&i| v[i].abs() >= level).unwrap_or(peak);
    let mut offset = peak;
    while offset + 1 < end && v[offset + 1].abs() >= level {
        offset += 1;
    }
    if onset == offset {
        return Err(Error::NoMovement);
    }
    Ok((onset, offset))
}

/// Index of the first local minimum of `|v|` strictly after `offset`.
/// The search walks forward while `|v|` keeps decreasing and stops at the
/// first increase (or the end of the recording).
pub fn target_index(velocity: &SampledSeries, offset: usize) -> Result<usize> {
    let v = velocity.values();
    if offset + 1 >= v.len() {
        return Err(Error::InvalidInput(format!(
            "offset {offset} leaves no samples to search for the target"
        )));
    }
    let mut j = offset + 1;
    while j + 1 < v.len() && v[j + 1].abs() < v[j].abs() {
        j += 1;
    }
    Ok(j)
}

/// State at the first minimum of `|v|` following the movement offset.
pub fn extract_target(state: &SampledSeries, velocity: &SampledSeries, offset: usize) -> Result<f64> {
    if state.len() != velocity.len() {
        return Err(Error::LengthMismatch {
            left: state.len(),
            right: velocity.len(),
        });
    }
    Ok(state.values()[target_index(velocity, offset)?])
}

/// True iff every velocity sample in `[onset, offset]` has the same strict
/// sign. A zero counts as a sign change.
pub fn check_monotonic(velocity: &SampledSeries, onset: usize, offset: usize) -> bool {
    let v = velocity.values();
    if offset >= v.len() || onset > offset {
        return false;
    }
    let w = &v[onset..=offset];
    w.iter().all(|&x| x > 0.0) || w.iter().all(|&x| x < 0.0)
}

/// Sign changes of the acceleration inside `[onset, offset]`, skipping exact zeros.
pub fn accel_zero_crossings(acceleration: &SampledSeries, onset: usize, offset: usize) -> usize {
    let a = acceleration.values();
    let end = offset.min(a.len().saturating_sub(1));
    let mut last = 0.0f64;
    let mut crossings = 0;
    for &x in a.iter().take(end + 1).skip(onset) {
        if x == 0.0 {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            crossings += 1;
        }
        last = x;
    }
    crossings
}

/// lambda = (t - x) / v over the movement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSeries {
    pub values: Vec<f64>,
    pub ln_values: Vec<f64>,
    /// Grid spacing in samples (1 for ordinary recordings).
    pub step: f64,
}

impl LambdaSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    /// Plot-only cap on very large initial lambda values.
    pub fn exceeds_plot_cap(&self, cap: f64) -> bool {
        self.initial() > cap
    }

    /// Sample-index abscissa of each value.
    pub fn abscissa(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| i as f64 * self.step).collect()
    }
}

pub fn lambda_series(token: &MovementToken, t: f64) -> Result<LambdaSeries> {
    if token.has_flag(Flag::NonMonotonic) {
        return Err(Error::InvalidInput(format!(
            "token {} is non-monotonic; lambda is undefined",
            token.id()
        )));
    }
    let traj = token.trajectory();
    let x = traj.state().values();
    let v = traj.velocity().values();
    let mut values = Vec::with_capacity(token.window_len());
    for i in token.onset()..=token.offset() {
        if v[i] == 0.0 {
            return Err(Error::ZeroVelocity(i));
        }
        let lambda = (t - x[i]) / v[i];
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonPositiveLambda {
                index: i,
                value: lambda,
            });
        }
        values.push(lambda);
    }
    let ln_values = values.iter().map(|l| l.ln()).collect();
    Ok(LambdaSeries {
        values,
        ln_values,
        step: traj.step_in_samples(),
    })
}

/// Straight-line fit of ln(lambda) against sample index; the slope is in
/// 1/sample and equals -r for exact model trajectories.
pub fn ln_lambda_fit(series: &LambdaSeries) -> Result<LinearFit> {
    if series.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: series.len(),
        });
    }
    if let Some((i, &v)) = series.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveLambda { index: i, value: v });
    }
    linear_regression(&series.abscissa(), &series.ln_values)
}
