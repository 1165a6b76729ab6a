//! Deterministic synthetic movements with known ground truth.
//!
//! Each recording is integrated with RK4 forward and backward from the onset
//! point `(x0, v0)` until the speed falls to `rest_fraction` of its peak, then
//! held at rest for `rest_pad` samples on both sides. Gaussian measurement
//! noise is added to the state only.
//!
//! Randomness: ChaCha8 seeded with `seed`, one stream per token where the
//! stream number is the 64-bit FNV-1a hash of the token id. Uniforms are
//! `(u64 >> 11) + 0.5` scaled by `2^-53`, mapped to normals through the
//! inverse normal CDF, so a token never depends on how many other tokens are
//! generated or in which order.

use std::collections::BTreeMap;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::{integrate_samples, Dynamics, GestureParams, MsdParams, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::segment::{segment_recording, MovementToken, SegmentConfig};
use crate::signal::{
    differentiate_pipeline, FilterConfig, Provenance, SampledSeries, SmoothConfig, Trajectory,
};

/// Where the velocity and acceleration of a synthetic token come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeSource {
    /// Exact model values along the integrated path (then optional
    /// acceleration noise).
    Integrator,
    /// The measurement pipeline applied to the (noisy) sampled state.
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub params: GestureParams,
    pub x0: f64,
    pub v0: f64,
    pub fs: f64,
    /// Standard deviation of additive state noise (mm).
    pub noise_sd: f64,
    /// Additive acceleration noise as a fraction of the peak |acceleration|.
    /// Only used with [`DerivativeSource::Integrator`].
    pub accel_noise_frac: f64,
    pub seed: u64,
    pub n_tokens: usize,
    pub derivatives: DerivativeSource,
    /// Integration step in samples.
    pub rk4_dt: f64,
    pub rest_fraction: f64,
    pub rest_pad: usize,
    pub segment: SegmentConfig,
    pub smooth: SmoothConfig,
    pub filter: FilterConfig,
}

impl SynthSpec {
    pub fn new(params: GestureParams, x0: f64, v0: f64) -> Self {
        Self {
            params,
            x0,
            v0,
            fs: 100.0,
            noise_sd: 0.0,
            accel_noise_frac: 0.0,
            seed: 0,
            n_tokens: 1,
            derivatives: DerivativeSource::Pipeline,
            rk4_dt: 1e-3,
            rest_fraction: 0.01,
            rest_pad: 30,
            segment: SegmentConfig::default(),
            smooth: SmoothConfig::default(),
            filter: FilterConfig::default(),
        }
    }

    /// Onset placed where the speed is `threshold` of the peak: the onset
    /// lambda is chosen so that `u exp(1/u - 1) = 1/threshold` with `u = r lambda0`.
    pub fn at_threshold_onset(params: GestureParams, x0: f64, threshold: f64) -> Result<Self> {
        let lambda0 = lambda0_for_onset_fraction(params.r, threshold)?;
        Ok(Self::new(params, x0, (params.t - x0) / lambda0))
    }

    pub fn lambda0(&self) -> f64 {
        (self.params.t - self.x0) / self.v0
    }

    fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0) || !(self.noise_sd >= 0.0) || !(self.accel_noise_frac >= 0.0) {
            return Err(Error::InvalidInput(
                "synthetic spec needs fs > 0 and non-negative noise".into(),
            ));
        }
        let l0 = self.lambda0();
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::NonPositiveLambda { index: 0, value: l0 });
        }
        if !(self.rest_fraction > 0.0 && self.rest_fraction < self.segment.threshold) {
            return Err(Error::InvalidInput(
                "rest fraction must lie below the segmentation threshold".into(),
            ));
        }
        Ok(())
    }
}

/// `u` with `u exp(1/u - 1) = 1/threshold`, divided by `r`.
pub fn lambda0_for_onset_fraction(r: f64, threshold: f64) -> Result<f64> {
    if !(r > 0.0) || !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need r > 0 and threshold in (0, 1), got r={r}, threshold={threshold}"
        )));
    }
    let target = 1.0 / threshold;
    let f = |u: f64| u * (1.0 / u - 1.0).exp() - target;
    // f is increasing on u > 1 with f(1) = 1 - target < 0
    let (mut lo, mut hi) = (1.0, 2.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / r)
}

/// A generated token together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthToken {
    pub token: MovementToken,
    pub truth: GestureParams,
    /// Noise-free sampled state of the whole recording.
    pub clean_state: Vec<f64>,
    /// Recording index of the integration origin `(x0, v0)`.
    pub origin: usize,
    /// Recording indices that were integrated (the rest holds excluded).
    pub integrated: std::ops::Range<usize>,
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic standard-normal stream for one token.
pub struct NoiseStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NoiseStream {
    pub fn new(seed: u64, token_id: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a(token_id.as_bytes()));
        Self {
            rng,
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }
}

struct Recording {
    points: Vec<(f64, f64)>,
    origin: usize,
    integrated: std::ops::Range<usize>,
}

fn integrate_recording<D: Dynamics>(
    model: &D,
    x0: f64,
    v0: f64,
    rk4_dt: f64,
    rest_fraction: f64,
    rest_pad: usize,
    backward: bool,
) -> Result<Recording> {
    let steps = (1.0 / rk4_dt).round().max(1.0) as usize;
    let run = |direction: f64| {
        let mut peak = v0.abs();
        let mut prev = v0.abs();
        integrate_samples(model, x0, v0, steps, direction, false, DEFAULT_MAX_STEPS, |_, _, v| {
            let s = v.abs();
            peak = peak.max(s);
            let falling = s < prev;
            prev = s;
            !(falling && s < rest_fraction * peak)
        })
    };
    let forward = run(1.0)?;
    let backward = if backward { run(-1.0)? } else { vec![(x0, v0)] };
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(forward.len() + backward.len() + 2 * rest_pad);
    let first = *backward.last().expect("nonempty");
    points.extend(std::iter::repeat_n((first.0, 0.0), rest_pad));
    points.extend(backward.iter().skip(1).rev());
    let origin = points.len();
    points.extend(forward.iter());
    let integrated = rest_pad..points.len();
    let last = *forward.last().expect("nonempty");
    points.extend(std::iter::repeat_n((last.0, 0.0), rest_pad));
    Ok(Recording {
        points,
        origin,
        integrated,
    })
}

fn build_trajectory<D: Dynamics>(
    model: &D,
    rec: &Recording,
    state: Vec<f64>,
    spec_fs: f64,
    derivatives: DerivativeSource,
    smooth: &SmoothConfig,
    filter: &FilterConfig,
) -> Result<Trajectory> {
    let dt = 1.0 / spec_fs;
    match derivatives {
        DerivativeSource::Pipeline => {
            differentiate_pipeline(&SampledSeries::new(state, dt, "mm")?, smooth, filter)
        }
        DerivativeSource::Integrator => {
            let v: Vec<f64> = rec.points.iter().map(|p| p.1).collect();
            let a = rec
                .points
                .iter()
                .enumerate()
                .map(|(i, &(x, v))| {
                    if rec.integrated.contains(&i) {
                        model.accel(x, v)
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Trajectory::from_vecs(state, v, a, dt, Provenance::Integrator)
        }
    }
}

/// Generate one token with the given id.
pub fn generate_token(spec: &SynthSpec, id: &str) -> Result<SynthToken> {
    generate_token_with_meta(spec, id, BTreeMap::new())
}

pub fn generate_token_with_meta(
    spec: &SynthSpec,
    id: &str,
    mut meta: BTreeMap<String, String>,
) -> Result<SynthToken> {
    spec.validate()?;
    let rec = integrate_recording(
        &spec.params,
        spec.x0,
        spec.v0,
        spec.rk4_dt,
        spec.rest_fraction,
        spec.rest_pad,
        true,
    )?;
    let clean: Vec<f64> = rec.points.iter().map(|p| p.0).collect();
    let mut noise = NoiseStream::new(spec.seed, id);
    let state: Vec<f64> = if spec.noise_sd > 0.0 {
        clean
            .iter()
            .map(|x| x + spec.noise_sd * noise.standard_normal())
            .collect()
    } else {
        clean.clone()
    };
    let mut traj = build_trajectory(
        &spec.params,
        &rec,
        state,
        spec.fs,
        spec.derivatives,
        &spec.smooth,
        &spec.filter,
    )?;
    if spec.derivatives == DerivativeSource::Integrator && spec.accel_noise_frac > 0.0 {
        let a = traj.acceleration().values();
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sd = spec.accel_noise_frac * peak;
        let noisy: Vec<f64> = a.iter().map(|v| v + sd * noise.standard_normal()).collect();
        traj = traj.with_acceleration(noisy)?;
    }
    meta.entry("source".into()).or_insert_with(|| "synthetic".into());
    let len = traj.len();
    let token = segment_recording(id, traj, 0..len, &spec.segment, meta)?;
    Ok(SynthToken {
        token,
        truth: spec.params,
        clean_state: clean,
        origin: rec.origin,
        integrated: rec.integrated,
    })
}

/// `spec.n_tokens` replicates with ids `{prefix}-{index:04}`; each replicate
/// has its own noise stream.
pub fn generate_replicates(spec: &SynthSpec, prefix: &str) -> Result<Vec<SynthToken>> {
    (0..spec.n_tokens)
        .into_par_iter()
        .map(|i| generate_token(spec, &format!("{prefix}-{i:04}")))
        .collect()
}

/// Mass-spring token with exact derivatives; the observed target is set to
/// the generating target. The movement is integrated forward from `(x0, v0)`
/// after a rest hold at `x0`.
pub fn generate_msd_token(
    params: &MsdParams,
    x0: f64,
    v0: f64,
    fs: f64,
    threshold: f64,
    id: &str,
) -> Result<MovementToken> {
    let rec = integrate_recording(params, x0, v0, 1e-3, threshold / 4.0, 10, false)?;
    let state: Vec<f64> = rec.points.iter().map(|p| p.0).collect();
    let traj = build_trajectory(
        params,
        &rec,
        state,
        fs,
        DerivativeSource::Integrator,
        &SmoothConfig::default(),
        &FilterConfig::default(),
    )?;
    let len = traj.len();
    let token = segment_recording(id, traj, 0..len, &SegmentConfig { threshold }, BTreeMap::new())?;
    Ok(token.with_t_obs(params.t))
}

/// Grid for [`sweep`]. Every combination produces one token; the target is
/// `x0 - displacement` (a closing movement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub r: Vec<f64>,
    pub displacement: Vec<f64>,
    pub x0: Vec<f64>,
    pub noise_sd: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template for everything not on the grid.
    pub base: SweepBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub fs: f64,
    pub derivatives: DerivativeSource,
    /// Onset lambda is chosen so the onset sits at this fraction of peak speed.
    pub onset_fraction: f64,
    pub segment: SegmentConfig,
    pub smooth: SmoothConfig,
    pub filter: FilterConfig,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            fs: 100.0,
            derivatives: DerivativeSource::Pipeline,
            onset_fraction: 0.2,
            segment: SegmentConfig::default(),
            smooth: SmoothConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub id: String,
    pub spec: SynthSpec,
    pub meta: BTreeMap<String, String>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.r.len() * self.displacement.len() * self.x0.len() * self.noise_sd.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order (r slowest, seed fastest).
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        if self.is_empty() {
            return Err(Error::InvalidInput("empty sweep grid".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.r {
            for &d in &self.displacement {
                for &x0 in &self.x0 {
                    for &noise in &self.noise_sd {
                        for &seed in &self.seeds {
                            let index = out.len();
                            let id = format!("g{index:05}_r{r}_d{d}_x{x0}_n{noise}_s{seed}");
                            let params = GestureParams::new(x0 - d, r)?;
                            let mut spec = SynthSpec::at_threshold_onset(
                                params,
                                x0,
                                self.base.onset_fraction,
                            )?;
                            spec.fs = self.base.fs;
                            spec.noise_sd = noise;
                            spec.seed = seed;
                            spec.derivatives = self.base.derivatives;
                            spec.segment = self.base.segment;
                            spec.smooth = self.base.smooth.clone();
                            spec.filter = self.base.filter.clone();
                            let meta: BTreeMap<String, String> = [
                                ("r", r.to_string()),
                                ("displacement", d.to_string()),
                                ("x0", x0.to_string()),
                                ("noise_sd", noise.to_string()),
                                ("seed", seed.to_string()),
                                ("speaker", "synthetic".to_string()),
                            ]
                            .into_iter()
                            .map(|(k, v)| (k.to_string(), v))
                            .collect();
                            out.push(GridPoint {
                                index,
                                id,
                                spec,
                                meta,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Cross-product corpus, generated in parallel and returned in grid order.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SynthToken>> {
    grid.points()?
        .into_par_iter()
        .map(|p| generate_token_with_meta(&p.spec, &p.id, p.meta))
        .collect()
}
