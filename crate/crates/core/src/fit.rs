//! Parameter estimation for the rapidity/target model and the mass-spring
//! baseline, plus simulate-and-score evaluation.

use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_paper_euler, EulerOptions, GestureParams, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::segment::{lambda_series, ln_lambda_fit, Flag, MovementToken};
use crate::signal::{resample_pchip, SampledSeries, Trajectory};
use crate::stats::{kinematic_summary, KinematicSummary};

pub use crate::stats::r_squared;

pub const GRID_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step changes both the log distance from the
    /// extreme state to the target and r (relatively) by less than this.
    pub tolerance: f64,
    pub initial_damping: f64,
    /// Minimum distance of the starting target beyond the extreme state (mm).
    pub target_nudge: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-10,
            initial_damping: 1e-3,
            target_nudge: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: GestureParams,
    pub r_squared: f64,
    /// Observed minus predicted acceleration over the window.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Window<'a> {
    x: &'a [f64],
    v: &'a [f64],
    a: &'a [f64],
}

impl<'a> Window<'a> {
    fn of(token: &'a MovementToken) -> Self {
        let (s, e) = (token.onset(), token.offset());
        let tr = token.trajectory();
        Self {
            x: &tr.state().values()[s..=e],
            v: &tr.velocity().values()[s..=e],
            a: &tr.acceleration().values()[s..=e],
        }
    }
}

fn check_fit_preconditions(token: &MovementToken) -> Result<()> {
    if token.has_flag(Flag::NonMonotonic) {
        return Err(Error::InvalidInput(format!(
            "token {} is non-monotonic",
            token.id()
        )));
    }
    if token.window_len() < 5 {
        return Err(Error::TooShort {
            needed: 5,
            got: token.window_len(),
        });
    }
    let w = Window::of(token);
    if w.x.iter().all(|&x| x == w.x[0]) {
        return Err(Error::Degenerate("all states in the window are equal".into()));
    }
    Ok(())
}

/// Least-squares fit of `a = r v - v^2 / (t - x)` over the movement window.
///
/// The target is kept strictly beyond the window's extreme state by fitting
/// `theta` in `t = x_extreme + direction * exp(theta)`. Levenberg-Marquardt
/// with Marquardt diagonal scaling; damping starts at `initial_damping` and is
/// multiplied by 10 on a rejected step and divided by 10 on an accepted one.
pub fn fit_eq5(token: &MovementToken, config: &FitConfig) -> Result<FitResult> {
    check_fit_preconditions(token)?;
    let w = Window::of(token);
    let dir = token.direction();
    let x_ext = token.extreme_state();

    let t0 = if (token.t_obs() - x_ext) * dir >= config.target_nudge {
        token.t_obs()
    } else {
        x_ext + dir * config.target_nudge
    };
    let r0 = lambda_series(token, t0)
        .and_then(|l| ln_lambda_fit(&l))
        .map(|f| -f.slope)
        .unwrap_or(0.1);

    let target = |theta: f64| x_ext + dir * theta.exp();
    let residuals = |theta: f64, r: f64| -> Vec<f64> {
        let t = target(theta);
        w.x.iter()
            .zip(w.v)
            .zip(w.a)
            .map(|((x, v), a)| a - (r * v - v * v / (t - x)))
            .collect()
    };
    let cost = |res: &[f64]| res.iter().map(|e| e * e).sum::<f64>();

    let mut theta = ((t0 - x_ext) * dir).ln();
    let mut r = r0;
    let mut res = residuals(theta, r);
    let mut c = cost(&res);
    let scale: f64 = w.a.iter().map(|a| a * a).sum();
    let mut mu = config.initial_damping;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        if c <= 1e-30 * scale {
            converged = true;
            break;
        }
        iterations += 1;
        let t = target(theta);
        let et = dir * theta.exp();
        // J columns: d res / d theta, d res / d r
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((x, v), e) in w.x.iter().zip(w.v).zip(&res) {
            let gap = t - x;
            let j1 = -v * v / (gap * gap) * et;
            let j2 = -v;
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * e;
            g2 += j2 * e;
        }
        if !(a11 > 0.0 && a22 > 0.0) {
            return Err(Error::Degenerate("zero Jacobian column".into()));
        }
        let mut accepted = false;
        while mu < 1e16 {
            let m11 = a11 * (1.0 + mu);
            let m22 = a22 * (1.0 + mu);
            let det = m11 * m22 - a12 * a12;
            let d_theta = (-g1 * m22 + g2 * a12) / det;
            let d_r = (-g2 * m11 + g1 * a12) / det;
            let trial = residuals(theta + d_theta, r + d_r);
            let c_new = cost(&trial);
            if c_new.is_finite() && c_new < c {
                theta += d_theta;
                r += d_r;
                res = trial;
                c = c_new;
                mu = (mu / 10.0).max(1e-15);
                accepted = true;
                if d_theta.abs() < config.tolerance && d_r.abs() < config.tolerance * r.abs().max(1e-6) {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let params = GestureParams { t: target(theta), r };
    let predicted: Vec<f64> = w.a.iter().zip(&res).map(|(a, e)| a - e).collect();
    Ok(FitResult {
        params,
        r_squared: r_squared(w.a, &predicted)?,
        residuals: res,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdFit {
    pub k: f64,
    pub b: f64,
    /// Target held fixed at the observed final state.
    pub t: f64,
    pub r_squared: f64,
}

/// Mass-spring baseline with the target fixed at `t_obs` and unit mass:
/// ordinary least squares of `a` on `[(t_obs - x), -v]`.
pub fn fit_msd(token: &MovementToken) -> Result<MsdFit> {
    check_fit_preconditions(token)?;
    let w = Window::of(token);
    let t = token.t_obs();
    let (mut s11, mut s12, mut s22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, v), a) in w.x.iter().zip(w.v).zip(w.a) {
        let c1 = t - x;
        let c2 = -v;
        s11 += c1 * c1;
        s12 += c1 * c2;
        s22 += c2 * c2;
        y1 += c1 * a;
        y2 += c2 * a;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-12 * s11 * s22) {
        return Err(Error::Degenerate("collinear mass-spring regressors".into()));
    }
    let k = (y1 * s22 - y2 * s12) / det;
    let b = (y2 * s11 - y1 * s12) / det;
    let predicted: Vec<f64> = w
        .x
        .iter()
        .zip(w.v)
        .map(|(x, v)| k * (t - x) - b * v)
        .collect();
    Ok(MsdFit {
        k,
        b,
        t,
        r_squared: r_squared(w.a, &predicted)?,
    })
}

/// State, velocity and acceleration on the common 100-point grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub state: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl Curves {
    pub fn from_trajectory(tr: &Trajectory) -> Result<Self> {
        let grid = |s: &SampledSeries| -> Result<Vec<f64>> {
            if s.len() == 1 {
                Ok(vec![s.values()[0]; GRID_POINTS])
            } else {
                Ok(resample_pchip(s, GRID_POINTS)?.into_values())
            }
        };
        Ok(Self {
            state: grid(tr.state())?,
            velocity: grid(tr.velocity())?,
            acceleration: grid(tr.acceleration())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScore {
    pub r2_state: f64,
    pub r2_velocity: f64,
    pub r2_accel: f64,
    /// Kinematics of the simulated movement; `None` for a one-sample simulation.
    pub kinematics: Option<KinematicSummary>,
    pub simulated_samples: usize,
    pub observed: Curves,
    pub simulated: Curves,
}

/// Run the unit-step scheme from the token's onset state and velocity with the
/// fitted parameters until the speed falls below `|v0|`, then compare observed
/// and simulated curves on a common 100-point grid.
pub fn simulate_and_score(token: &MovementToken, fit: &FitResult) -> Result<SimScore> {
    if !fit.converged {
        return Err(Error::InvalidInput(format!(
            "fit for token {} did not converge",
            token.id()
        )));
    }
    let sample_period = token.trajectory().sample_period();
    let opts = EulerOptions {
        stop: crate::dynamics::StopRule::SpeedBelow(token.v0().abs()),
        max_steps: DEFAULT_MAX_STEPS,
        sample_period,
    };
    let sim = simulate_paper_euler(token.x0(), token.v0(), &fit.params, &opts)?;
    let observed = Curves::from_trajectory(&token.window())?;
    let simulated = Curves::from_trajectory(&sim)?;
    let simulated_samples = sim.len();
    let kinematics = if sim.len() >= 2 {
        let last = *sim.state().values().last().expect("nonempty");
        let n = sim.len();
        let sim_token = MovementToken::new(
            format!("{}/sim", token.id()),
            sim,
            0,
            n - 1,
            last,
            Default::default(),
        )?;
        Some(kinematic_summary(&sim_token)?)
    } else {
        None
    };
    Ok(SimScore {
        r2_state: r_squared(&observed.state, &simulated.state)?,
        r2_velocity: r_squared(&observed.velocity, &simulated.velocity)?,
        r2_accel: r_squared(&observed.acceleration, &simulated.acceleration)?,
        kinematics,
        simulated_samples,
        observed,
        simulated,
    })
}
