//! Preprocessing of raw sampled trajectories: lip aperture, robust smoothing,
//! central differencing, zero-phase Butterworth lowpass and PCHIP resampling.

mod butterworth;
mod pchip;
mod pipeline;
mod series;
mod smooth;

pub use butterworth::{butterworth_lowpass, Butterworth, Section};
pub use pchip::{resample_pchip, Pchip};
pub use pipeline::{differentiate_pipeline, FilterConfig};
pub use series::{
    per_sample2_to_per_second2, per_sample_to_per_second, per_second_to_per_sample,
    Provenance, SampledSeries, Trajectory,
};
pub use smooth::{smooth, smooth_detailed, SmoothConfig, SmoothOutcome, SmoothStrength};

use crate::error::{Error, Result};

/// A 3-D sensor track in mm sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrack {
    pub points: Vec<[f64; 3]>,
    pub dt: f64,
}

impl SensorTrack {
    pub fn new(points: Vec<[f64; 3]>, dt: f64) -> Self {
        Self { points, dt }
    }
}

/// Per-sample Euclidean distance between the upper- and lower-lip sensors.
pub fn lip_aperture(upper: &SensorTrack, lower: &SensorTrack) -> Result<SampledSeries> {
    if upper.points.len() != lower.points.len() {
        return Err(Error::LengthMismatch {
            left: upper.points.len(),
            right: lower.points.len(),
        });
    }
    if upper.dt != lower.dt {
        return Err(Error::InvalidInput(format!(
            "sensor sampling intervals differ: {} vs {}",
            upper.dt, lower.dt
        )));
    }
    let mut values = Vec::with_capacity(upper.points.len());
    for (i, (u, l)) in upper.points.iter().zip(&lower.points).enumerate() {
        if u.iter().chain(l).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let d2: f64 = u.iter().zip(l).map(|(a, b)| (a - b) * (a - b)).sum();
        values.push(d2.sqrt());
    }
    SampledSeries::new(values, upper.dt, "mm")
}

/// Central first difference in per-sample units.
///
/// Interior points use `(v[i+1] - v[i-1]) / 2`; the two endpoints use one-sided
/// first differences so the output stays aligned with the input.
pub fn central_difference(series: &SampledSeries) -> Result<SampledSeries> {
    series.require_len(3)?;
    let v = series.values();
    let n = v.len();
    let mut d = Vec::with_capacity(n);
    d.push(v[1] - v[0]);
    d.extend(v.windows(3).map(|w| (w[2] - w[0]) / 2.0));
    d.push(v[n - 1] - v[n - 2]);
    series
        .with_values(d)
        .map(|s| s.with_unit(format!("{}/sample", series.unit())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(points: Vec<[f64; 3]>) -> SensorTrack {
        SensorTrack::new(points, 0.01)
    }

    #[test]
    fn aperture_trivial_cases() {
        let la = lip_aperture(&track(vec![[0.0; 3]]), &track(vec![[0.0; 3]])).unwrap();
        assert_eq!(la.values(), &[0.0]);
        let la = lip_aperture(&track(vec![[0.0; 3]]), &track(vec![[3.0, 4.0, 0.0]])).unwrap();
        assert_eq!(la.values(), &[5.0]);
        assert_eq!(la.unit(), "mm");
    }

    #[test]
    fn aperture_matches_hand_norms() {
        // separations chosen as Pythagorean quadruples and triples
        let seps = [
            [1.0, 2.0, 2.0],
            [2.0, 3.0, 6.0],
            [1.0, 4.0, 8.0],
            [4.0, 4.0, 7.0],
            [2.0, 6.0, 9.0],
            [6.0, 6.0, 7.0],
            [3.0, 4.0, 12.0],
            [0.0, 5.0, 12.0],
            [8.0, 15.0, 0.0],
            [0.0, 0.0, 2.5],
        ];
        let expected = [3.0, 7.0, 9.0, 9.0, 11.0, 11.0, 13.0, 13.0, 17.0, 2.5];
        let upper: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, -1.0, 10.0 + i as f64]).collect();
        let lower: Vec<[f64; 3]> = upper
            .iter()
            .zip(&seps)
            .map(|(u, s)| [u[0] + s[0], u[1] - s[1], u[2] + s[2]])
            .collect();
        let la = lip_aperture(&track(upper), &track(lower)).unwrap();
        for (got, want) in la.values().iter().zip(expected) {
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn aperture_errors() {
        assert!(matches!(
            lip_aperture(&track(vec![[0.0; 3]; 2]), &track(vec![[0.0; 3]])),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(
            lip_aperture(&track(vec![[0.0, f64::INFINITY, 0.0]]), &track(vec![[0.0; 3]])),
            Err(Error::NonFinite(0))
        );
    }

    #[test]
    fn central_difference_examples() {
        let ramp = SampledSeries::new((0..8).map(|i| 2.0 * i as f64).collect(), 0.01, "mm").unwrap();
        let d = central_difference(&ramp).unwrap();
        assert!(d.values().iter().all(|&v| v == 2.0));
        assert_eq!(d.unit(), "mm/sample");

        let flat = SampledSeries::new(vec![3.0; 5], 0.01, "mm").unwrap();
        assert!(central_difference(&flat).unwrap().values().iter().all(|&v| v == 0.0));

        let quad = SampledSeries::new((0..10).map(|i| (i * i) as f64).collect(), 0.01, "mm").unwrap();
        let d = central_difference(&quad).unwrap();
        for i in 1..9 {
            assert_eq!(d.values()[i], 2.0 * i as f64);
        }

        let short = SampledSeries::new(vec![1.0, 2.0], 0.01, "mm").unwrap();
        assert!(matches!(central_difference(&short), Err(Error::TooShort { .. })));
    }

    #[test]
    fn second_difference_of_cubic_is_6i() {
        let cubic =
            SampledSeries::new((0..12).map(|i| (i * i * i) as f64).collect(), 0.01, "mm").unwrap();
        let dd = central_difference(&central_difference(&cubic).unwrap()).unwrap();
        // interior of interior: the stencil spans i-2..i+2
        for i in 2..10 {
            assert_eq!(dd.values()[i], 6.0 * i as f64);
        }
    }
}
