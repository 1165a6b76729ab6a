//! Robust penalized least-squares smoothing.
//!
//! Minimizes `sum w_i (y_i - z_i)^2 + s * sum (second difference of z)^2` with
//! bisquare reweighting of residuals. The second-difference penalty leaves
//! constants and straight lines untouched. The smoothing strength `s` is
//! either fixed or chosen by generalized cross-validation on a log grid.

use serde::{Deserialize, Serialize};

use super::series::SampledSeries;
use crate::error::{Error, Result};

const BISQUARE_C: f64 = 4.685;
const MAD_TO_SD: f64 = 1.4826;
/// Residual scale, relative to the data range, below which a trace counts as
/// noiseless and robust reweighting is skipped.
pub const RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SmoothStrength {
    Fixed(f64),
    /// GCV search over `10^log10_min ..= 10^log10_max` with `points` grid nodes.
    Gcv {
        log10_min: f64,
        log10_max: f64,
        points: usize,
    },
}

impl Default for SmoothStrength {
    fn default() -> Self {
        SmoothStrength::Gcv {
            log10_min: -3.0,
            log10_max: 6.0,
            points: 37,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothConfig {
    pub strength: SmoothStrength,
    /// Number of bisquare reweighting passes; 0 disables robust weighting.
    pub robust_iterations: usize,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            strength: SmoothStrength::default(),
            robust_iterations: 3,
        }
    }
}

impl SmoothConfig {
    pub fn fixed(s: f64) -> Self {
        Self {
            strength: SmoothStrength::Fixed(s),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOutcome {
    pub series: SampledSeries,
    /// Smoothing strength used in the final pass.
    pub strength: f64,
    /// Final robust weights in [0, 1].
    pub weights: Vec<f64>,
}

pub fn smooth(series: &SampledSeries, config: &SmoothConfig) -> Result<SampledSeries> {
    smooth_detailed(series, config).map(|o| o.series)
}

pub fn smooth_detailed(series: &SampledSeries, config: &SmoothConfig) -> Result<SmoothOutcome> {
    if series.is_empty() {
        return Err(Error::TooShort { needed: 3, got: 0 });
    }
    series.require_len(3)?;
    match config.strength {
        SmoothStrength::Fixed(s) if !(s.is_finite() && s >= 0.0) => {
            return Err(Error::InvalidInput(format!("smoothing strength {s} must be >= 0")))
        }
        SmoothStrength::Gcv { points, log10_min, log10_max }
            if points == 0 || !(log10_min <= log10_max) =>
        {
            return Err(Error::InvalidInput("empty GCV grid".into()))
        }
        _ => {}
    }

    let y = series.values();
    let n = y.len();
    let mut weights = vec![1.0; n];
    let (mut z, mut s, mut trace) = fit_pass(y, &weights, &config.strength)?;

    for _ in 0..config.robust_iterations {
        let residuals: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
        let leverage = (trace / n as f64).min(1.0 - 1e-12);
        match bisquare_weights(&residuals, leverage, y) {
            Some(w) => weights = w,
            None => break,
        }
        (z, s, trace) = fit_pass(y, &weights, &config.strength)?;
    }

    Ok(SmoothOutcome {
        series: series.with_values(z)?,
        strength: s,
        weights,
    })
}

fn fit_pass(y: &[f64], w: &[f64], strength: &SmoothStrength) -> Result<(Vec<f64>, f64, f64)> {
    match *strength {
        SmoothStrength::Fixed(s) => {
            let f = Pentadiagonal::whittaker(w, s).factor()?;
            let z = f.solve(&weighted(y, w));
            let tr = f.weighted_inverse_trace(w);
            Ok((z, s, tr))
        }
        SmoothStrength::Gcv {
            log10_min,
            log10_max,
            points,
        } => {
            let n = y.len() as f64;
            let wy = weighted(y, w);
            let mut best: Option<(f64, Vec<f64>, f64, f64)> = None;
            for k in 0..points {
                let e = if points == 1 {
                    log10_min
                } else {
                    log10_min + (log10_max - log10_min) * k as f64 / (points - 1) as f64
                };
                let s = 10f64.powf(e);
                let f = Pentadiagonal::whittaker(w, s).factor()?;
                let z = f.solve(&wy);
                let tr = f.weighted_inverse_trace(w);
                let rss: f64 = y
                    .iter()
                    .zip(&z)
                    .zip(w)
                    .map(|((a, b), wi)| wi * (a - b) * (a - b))
                    .sum();
                let denom = (1.0 - tr / n).powi(2);
                let gcv = if denom > 0.0 { rss / n / denom } else { f64::INFINITY };
                if best.as_ref().is_none_or(|b| gcv < b.0) {
                    best = Some((gcv, z, s, tr));
                }
            }
            let (_, z, s, tr) = best.expect("grid is nonempty");
            Ok((z, s, tr))
        }
    }
}

fn weighted(y: &[f64], w: &[f64]) -> Vec<f64> {
    y.iter().zip(w).map(|(a, b)| a * b).collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Bisquare weights from studentized residuals. `None` when the residual scale
/// is below [`RESOLUTION`] of the data range: the data carries no measurable
/// noise, and weights built from such a scale would reject every sample the
/// smooth does not reproduce to rounding.
fn bisquare_weights(residuals: &[f64], leverage: f64, y: &[f64]) -> Option<Vec<f64>> {
    let mut r = residuals.to_vec();
    let med = median(&mut r);
    let mut dev: Vec<f64> = residuals.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut dev);
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if mad <= RESOLUTION * (hi - lo) || mad == 0.0 {
        return None;
    }
    let sigma = MAD_TO_SD * mad * (1.0 - leverage).sqrt();
    Some(
        residuals
            .iter()
            .map(|ri| {
                let u = ri / (BISQUARE_C * sigma);
                if u.abs() < 1.0 {
                    (1.0 - u * u).powi(2)
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Symmetric pentadiagonal matrix stored by its three upper diagonals.
#[derive(Debug, Clone)]
pub(crate) struct Pentadiagonal {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Pentadiagonal {
    /// `diag(w) + s * D'D` with `D` the (n-2) x n second-difference operator.
    pub(crate) fn whittaker(w: &[f64], s: f64) -> Self {
        let n = w.len();
        let mut d0 = w.to_vec();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        let c = [1.0, -2.0, 1.0];
        for j in 0..n.saturating_sub(2) {
            for a in 0..3 {
                d0[j + a] += s * c[a] * c[a];
                if a + 1 < 3 {
                    d1[j + a] += s * c[a] * c[a + 1];
                }
            }
            d2[j] += s * c[0] * c[2];
        }
        Self { d0, d1, d2 }
    }

    /// Banded LDL' factorization.
    pub(crate) fn factor(&self) -> Result<Ldl> {
        let n = self.d0.len();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n + 1];
        let mut l2 = vec![0.0; n + 2];
        for i in 0..n {
            let mut di = self.d0[i];
            if i >= 1 {
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if !(di > 0.0) {
                return Err(Error::Degenerate(format!(
                    "smoothing system is not positive definite at row {i}"
                )));
            }
            d[i] = di;
            let mut a1 = self.d1[i];
            if i >= 1 {
                a1 -= l2[i + 1] * l1[i] * d[i - 1];
            }
            l1[i + 1] = a1 / di;
            l2[i + 2] = self.d2[i] / di;
        }
        Ok(Ldl { d, l1, l2 })
    }
}

/// `L D L'` with unit lower-triangular `L` of bandwidth 2.
/// `l1[i] = L[i][i-1]`, `l2[i] = L[i][i-2]`.
#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Ldl {
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n {
            if i >= 1 {
                x[i] -= self.l1[i] * x[i - 1];
            }
            if i >= 2 {
                x[i] -= self.l2[i] * x[i - 2];
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                x[i] -= self.l1[i + 1] * x[i + 1];
            }
            if i + 2 < n {
                x[i] -= self.l2[i + 2] * x[i + 2];
            }
        }
        x
    }

    /// Diagonal of the inverse via the banded Takahashi recursion.
    pub(crate) fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.d.len();
        // z0[i] = Z[i][i], z1[i] = Z[i][i+1], z2[i] = Z[i][i+2]
        let mut z0 = vec![0.0; n + 2];
        let mut z1 = vec![0.0; n + 2];
        let mut z2 = vec![0.0; n + 2];
        for i in (0..n).rev() {
            let a = if i + 1 < n { self.l1[i + 1] } else { 0.0 };
            let b = if i + 2 < n { self.l2[i + 2] } else { 0.0 };
            z2[i] = -(a * z1[i + 1] + b * z0[i + 2]);
            z1[i] = -(a * z0[i + 1] + b * z1[i + 1]);
            z0[i] = 1.0 / self.d[i] - (a * z1[i] + b * z2[i]);
        }
        z0.truncate(n);
        z0
    }

    /// `trace((W + sP)^-1 W)`, the effective degrees of freedom of the smooth.
    pub(crate) fn weighted_inverse_trace(&self, w: &[f64]) -> f64 {
        self.inverse_diagonal().iter().zip(w).map(|(z, wi)| z * wi).sum()
    }
}
