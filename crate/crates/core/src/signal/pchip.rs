use super::series::SampledSeries;
use crate::error::{Error, Result};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes with
/// the weighted harmonic mean at interior knots).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let n = x.len();
        if n < 2 {
            return Err(Error::TooShort { needed: 2, got: n });
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&hi| !(hi > 0.0)) {
            return Err(Error::InvalidInput("knots must be strictly increasing".into()));
        }
        let delta: Vec<f64> = y.windows(2).zip(&h).map(|(w, hi)| (w[1] - w[0]) / hi).collect();

        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Ok(Self { x, y, d });
        }
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 <= 0.0 {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

// three-point end formula, clipped to preserve shape
fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Resample onto `n` uniformly spaced points spanning the original time range.
/// The first and last outputs equal the first and last inputs.
pub fn resample_pchip(series: &SampledSeries, n: usize) -> Result<SampledSeries> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("resample length must be >= 2, got {n}")));
    }
    series.require_len(2)?;
    let m = series.len();
    let knots: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let interp = Pchip::new(knots, series.values().to_vec())?;
    let span = (m - 1) as f64;
    let mut out: Vec<f64> = (0..n)
        .map(|j| interp.eval(span * j as f64 / (n - 1) as f64))
        .collect();
    out[0] = series.values()[0];
    out[n - 1] = series.values()[m - 1];
    SampledSeries::new(out, series.dt() * span / (n - 1) as f64, series.unit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: Vec<f64>) -> SampledSeries {
        SampledSeries::new(v, 0.01, "mm").unwrap()
    }

    #[test]
    fn reproduces_linear_data() {
        let s = series((0..7).map(|i| 1.5 * i as f64 - 2.0).collect());
        for n in [2, 3, 13, 100] {
            let r = resample_pchip(&s, n).unwrap();
            for (j, v) in r.values().iter().enumerate() {
                let t = 6.0 * j as f64 / (n - 1) as f64;
                assert!((v - (1.5 * t - 2.0)).abs() < 1e-12);
            }
            assert!((r.dt() * (n - 1) as f64 - 0.06).abs() < 1e-15);
        }
    }

    #[test]
    fn keeps_endpoints_and_interpolates_knots() {
        let s = series(vec![3.0, -1.0, 4.0, 1.0, 5.0, -9.0]);
        let r = resample_pchip(&s, 100).unwrap();
        assert_eq!(r.values()[0], 3.0);
        assert_eq!(r.values()[99], -9.0);
        let p = Pchip::new((0..6).map(f64::from).collect(), s.values().to_vec()).unwrap();
        for (i, y) in s.values().iter().enumerate() {
            assert!((p.eval(i as f64) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decreasing_trace_stays_non_increasing() {
        let v: Vec<f64> = (0..57)
            .map(|i| {
                let t = i as f64 / 56.0;
                22.0 + 8.0 * (1.0 - t * t * (3.0 - 2.0 * t))
            })
            .collect();
        // smoothstep is flat at both ends; tilt it to be strictly decreasing
        let v: Vec<f64> = v.iter().enumerate().map(|(i, x)| x - 1e-3 * i as f64).collect();
        let r = resample_pchip(&series(v), 100).unwrap();
        assert!(r.values().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(resample_pchip(&series(vec![1.0, 2.0]), 1).is_err());
        assert!(resample_pchip(&series(vec![1.0]), 10).is_err());
    }
}
