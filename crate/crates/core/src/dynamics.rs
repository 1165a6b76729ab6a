//! Model equations, closed-form solution and trajectory simulation.
//!
//! All rates are per sample: velocity in mm/sample, acceleration in
//! mm/sample^2 and the rapidity `r` in 1/sample. One sample lasts
//! `sample_period` seconds (0.01 s at 100 Hz).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Provenance, SampledSeries, Trajectory};

/// Minimum distance to the target before the nonlinear term is considered singular.
pub const TARGET_EPSILON: f64 = 1e-9;

pub const DEFAULT_SAMPLE_PERIOD: f64 = 0.01;

pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Control parameters of the point-attractor model with exponentially
/// decaying lambda: target `t` (mm) and rapidity `r` (1/sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureParams {
    pub t: f64,
    pub r: f64,
}

impl GestureParams {
    /// `r == 0` is admitted: lambda is then constant and the model reduces to
    /// the first-order point attractor.
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !t.is_finite() || !r.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite parameters t={t}, r={r}")));
        }
        if r < 0.0 {
            return Err(Error::InvalidInput(format!("rapidity must be >= 0, got {r}")));
        }
        Ok(Self { t, r })
    }

    /// Rapidity in 1/s for a given sample period.
    pub fn r_per_second(&self, sample_period: f64) -> f64 {
        self.r / sample_period
    }

    /// Same parameters in a spatial unit `scale` times smaller.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            t: self.t * scale,
            r: self.r,
        }
    }
}

/// Damped mass-spring baseline: `b v = k (t - x) - m a` with `m` fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdParams {
    pub k: f64,
    pub b: f64,
    pub m: f64,
    pub t: f64,
}

impl MsdParams {
    pub fn new(k: f64, b: f64, t: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) || !(b >= 0.0 && b.is_finite()) || !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mass-spring parameters need k > 0, b >= 0 (got k={k}, b={b}, t={t})"
            )));
        }
        Ok(Self { k, b, m: 1.0, t })
    }
}

/// Acceleration `r v - v^2 / (t - x)`.
pub fn accel_eq5(x: f64, v: f64, p: &GestureParams) -> Result<f64> {
    let gap = p.t - x;
    if gap.abs() <= TARGET_EPSILON {
        return Err(Error::Singularity {
            step: 0,
            x,
            target: p.t,
        });
    }
    Ok(p.r * v - v * v / gap)
}

/// First-order point attractor velocity `(t - x) / lambda`.
pub fn velocity_eq2(x: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda {
            index: 0,
            value: lambda,
        });
    }
    Ok((t - x) / lambda)
}

/// Mass-spring acceleration `(k (t - x) - b v) / m`.
pub fn accel_msd(x: f64, v: f64, p: &MsdParams) -> f64 {
    (p.k * (p.t - x) - p.b * v) / p.m
}

/// Initial lambda `(t - x0) / v0`.
pub fn initial_lambda(x0: f64, v0: f64, t: f64) -> f64 {
    (t - x0) / v0
}

/// A second-order autonomous model `a = f(x, v)`.
pub trait Dynamics {
    fn accel(&self, x: f64, v: f64) -> Result<f64>;

    /// Target the state must not reach, if the model has a singular one.
    fn singular_target(&self) -> Option<f64> {
        None
    }
}

impl Dynamics for GestureParams {
    fn accel(&self, x: f64, v: f64) -> Result<f64> {
        accel_eq5(x, v, self)
    }

    fn singular_target(&self) -> Option<f64> {
        Some(self.t)
    }
}

impl Dynamics for MsdParams {
    fn accel(&self, x: f64, v: f64) -> Result<f64> {
        Ok(accel_msd(x, v, self))
    }
}

/// Exact solution of the model at time `tau` (samples, may be negative or
/// fractional): `x = t - (t - x0) exp[(1 - e^(r tau)) / (r lambda0)]`.
/// Returns `(x, v)`.
pub fn closed_form_at(tau: f64, x0: f64, v0: f64, p: &GestureParams) -> Result<(f64, f64)> {
    let lambda0 = initial_lambda(x0, v0, p.t);
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::NonPositiveLambda {
            index: 0,
            value: lambda0,
        });
    }
    // (1 - e^(r tau)) / r, with the r -> 0 limit -tau
    let growth = if p.r == 0.0 {
        -tau
    } else {
        -(p.r * tau).exp_m1() / p.r
    };
    let gap = (p.t - x0) * (growth / lambda0).exp();
    let lambda = lambda0 * (-p.r * tau).exp();
    Ok((p.t - gap, gap / lambda))
}

/// Closed-form state at samples `0..n` on a grid of `sample_period` seconds.
pub fn closed_form_state(
    n: usize,
    x0: f64,
    v0: f64,
    p: &GestureParams,
    sample_period: f64,
) -> Result<SampledSeries> {
    let values = (0..n)
        .map(|i| closed_form_at(i as f64, x0, v0, p).map(|(x, _)| x))
        .collect::<Result<Vec<_>>>()?;
    SampledSeries::new(values, sample_period, "mm")
}

/// When a simulation stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Keep samples while `|v| >= speed`; stop at the first sample below it.
    SpeedBelow(f64),
    /// Produce exactly this many samples.
    Samples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerOptions {
    pub stop: StopRule,
    pub max_steps: usize,
    pub sample_period: f64,
}

impl EulerOptions {
    pub fn stop_below(speed: f64) -> Self {
        Self {
            stop: StopRule::SpeedBelow(speed),
            max_steps: DEFAULT_MAX_STEPS,
            sample_period: DEFAULT_SAMPLE_PERIOD,
        }
    }
}

fn check_stop_rule(stop: StopRule, v0: f64) -> Result<()> {
    if let StopRule::SpeedBelow(speed) = stop {
        if !(speed > 0.0) {
            return Err(Error::InvalidInput(format!("stop speed must be > 0, got {speed}")));
        }
        if v0.abs() < speed {
            return Err(Error::InvalidInput(format!(
                "initial speed {} is already below the stop speed {speed}",
                v0.abs()
            )));
        }
    }
    Ok(())
}

fn crossed(target: Option<f64>, x0: f64, x: f64) -> bool {
    match target {
        Some(t) => (t - x) * (t - x0) <= 0.0 || (t - x).abs() <= TARGET_EPSILON,
        None => false,
    }
}

/// The unit-step scheme: `a_n = f(x_n, v_n)`, `v_{n+1} = v_n + a_n`,
/// `x_{n+1} = x_n + v_{n+1}`.
pub fn simulate_paper_euler(
    x0: f64,
    v0: f64,
    p: &GestureParams,
    opts: &EulerOptions,
) -> Result<Trajectory> {
    simulate_euler_with(x0, v0, p, opts)
}

pub fn simulate_euler_with<D: Dynamics>(
    x0: f64,
    v0: f64,
    model: &D,
    opts: &EulerOptions,
) -> Result<Trajectory> {
    check_stop_rule(opts.stop, v0)?;
    let target = model.singular_target();
    let mut xs = vec![x0];
    let mut vs = vec![v0];
    let mut a = model.accel(x0, v0)?;
    let mut acs = vec![a];
    let (mut x, mut v) = (x0, v0);
    loop {
        if let StopRule::Samples(n) = opts.stop {
            if xs.len() >= n {
                break;
            }
        }
        if xs.len() > opts.max_steps {
            return Err(Error::StepCapExceeded(opts.max_steps));
        }
        v += a;
        x += v;
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::NonFinite(xs.len()));
        }
        if crossed(target, x0, x) {
            return Err(Error::Singularity {
                step: xs.len(),
                x,
                target: target.unwrap_or(f64::NAN),
            });
        }
        if let StopRule::SpeedBelow(speed) = opts.stop {
            if v.abs() < speed {
                break;
            }
        }
        a = model.accel(x, v)?;
        xs.push(x);
        vs.push(v);
        acs.push(a);
    }
    Trajectory::from_vecs(xs, vs, acs, opts.sample_period, Provenance::Integrator)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Options {
    /// Integration step as a fraction of one sample; rounded so that a whole
    /// number of steps fits in a sample.
    pub dt: f64,
    pub stop: StopRule,
    pub max_samples: usize,
    pub sample_period: f64,
    /// Keep every integration step instead of one point per sample.
    pub dense: bool,
}

impl Rk4Options {
    pub fn new(dt: f64, stop: StopRule) -> Self {
        Self {
            dt,
            stop,
            max_samples: DEFAULT_MAX_STEPS,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            dense: false,
        }
    }

    pub fn dense(mut self) -> Self {
        self.dense = true;
        self
    }

    fn steps_per_sample(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "integration step must be in (0, 1] samples, got {}",
                self.dt
            )));
        }
        Ok((1.0 / self.dt).round().max(1.0) as usize)
    }
}

fn rk4_step<D: Dynamics>(model: &D, x: f64, v: f64, h: f64) -> Result<(f64, f64)> {
    let a1 = model.accel(x, v)?;
    let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
    let a2 = model.accel(x2, v2)?;
    let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
    let a3 = model.accel(x3, v3)?;
    let (x4, v4) = (x + h * v3, v + h * a3);
    let a4 = model.accel(x4, v4)?;
    Ok((
        x + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
        v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    ))
}

/// Points at whole samples `0, ±1, ±2, ...` (sign of `direction`) integrated
/// with `steps` RK4 steps per sample, until `keep_going` says stop. When
/// `dense` is set every intermediate step is returned as well.
pub(crate) fn integrate_samples<D: Dynamics>(
    model: &D,
    x0: f64,
    v0: f64,
    steps: usize,
    direction: f64,
    dense: bool,
    max_samples: usize,
    mut keep_going: impl FnMut(usize, f64, f64) -> bool,
) -> Result<Vec<(f64, f64)>> {
    let target = model.singular_target();
    let h = direction / steps as f64;
    let mut out = vec![(x0, v0)];
    let (mut x, mut v) = (x0, v0);
    let mut sample = 0usize;
    loop {
        if sample >= max_samples {
            return Err(Error::StepCapExceeded(max_samples));
        }
        let mut pending = Vec::with_capacity(if dense { steps } else { 1 });
        for _ in 0..steps {
            (x, v) = rk4_step(model, x, v, h)?;
            if crossed(target, x0, x) || !x.is_finite() || !v.is_finite() {
                return Err(Error::Singularity {
                    step: sample + 1,
                    x,
                    target: target.unwrap_or(f64::NAN),
                });
            }
            if dense {
                pending.push((x, v));
            }
        }
        sample += 1;
        if !keep_going(sample, x, v) {
            break;
        }
        if dense {
            out.extend(pending);
        } else {
            out.push((x, v));
        }
    }
    Ok(out)
}

/// Classical fourth-order Runge-Kutta on `(x, v)` at a fraction of a sample,
/// reported on the whole-sample grid (or every step when `dense`). The stop
/// rule is checked at whole samples.
pub fn simulate_rk4(x0: f64, v0: f64, p: &GestureParams, opts: &Rk4Options) -> Result<Trajectory> {
    simulate_rk4_with(x0, v0, p, opts)
}

pub fn simulate_rk4_with<D: Dynamics>(
    x0: f64,
    v0: f64,
    model: &D,
    opts: &Rk4Options,
) -> Result<Trajectory> {
    check_stop_rule(opts.stop, v0)?;
    let steps = opts.steps_per_sample()?;
    model.accel(x0, v0)?;
    let stop = opts.stop;
    let points = integrate_samples(
        model,
        x0,
        v0,
        steps,
        1.0,
        opts.dense,
        opts.max_samples,
        |sample, _, v| match stop {
            StopRule::SpeedBelow(speed) => v.abs() >= speed,
            StopRule::Samples(n) => sample < n,
        },
    )?;
    let dt = if opts.dense {
        opts.sample_period / steps as f64
    } else {
        opts.sample_period
    };
    trajectory_from_points(model, &points, dt, opts.sample_period)
}

pub(crate) fn trajectory_from_points<D: Dynamics>(
    model: &D,
    points: &[(f64, f64)],
    dt: f64,
    sample_period: f64,
) -> Result<Trajectory> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let acs = points
        .iter()
        .map(|&(x, v)| model.accel(x, v))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::with_sample_period(
        SampledSeries::new(xs, dt, "mm")?,
        SampledSeries::new(vs, dt, "mm/sample")?,
        SampledSeries::new(acs, dt, "mm/sample/sample")?,
        sample_period,
        Provenance::Integrator,
    )
}

/// Maximum mismatch in `d/dt[(t - x)/v] = -r (t - x)/v`, the identity the
/// model is derived from. The left side is a fourth-order central difference
/// of the lambda series on the trajectory's own grid (second order for fewer
/// than five samples), so the residual of an exact model trajectory shrinks
/// with the fourth power of the grid step.
pub fn appendix_a_residual(traj: &Trajectory, p: &GestureParams) -> Result<f64> {
    traj.state().require_len(3)?;
    let h = traj.step_in_samples();
    let lambda = traj
        .state()
        .values()
        .iter()
        .zip(traj.velocity().values())
        .enumerate()
        .map(|(i, (x, v))| {
            if *v == 0.0 {
                Err(Error::ZeroVelocity(i))
            } else {
                Ok((p.t - x) / v)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    // fourth-order central difference where five points are available
    let five = lambda.windows(5).map(|w| {
        let d = (w[0] - 8.0 * w[1] + 8.0 * w[3] - w[4]) / (12.0 * h);
        (d + p.r * w[2]).abs()
    });
    if lambda.len() >= 5 {
        Ok(five.fold(0.0, f64::max))
    } else {
        Ok(lambda
            .windows(3)
            .map(|w| ((w[2] - w[0]) / (2.0 * h) + p.r * w[1]).abs())
            .fold(0.0, f64::max))
    }
}
