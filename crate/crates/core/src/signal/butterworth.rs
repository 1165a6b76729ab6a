//! Digital Butterworth lowpass as cascaded second-order sections, applied
//! forward and backward for zero phase.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::series::SampledSeries;
use crate::error::{Error, Result};

/// One biquad in transposed direct form II. `a0` is normalized to 1.
/// First-order sections carry `b[2] == a[2] == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    fn is_first_order(&self) -> bool {
        self.b[2] == 0.0 && self.a[2] == 0.0
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = self.a[0] + z_inv * (self.a[1] + z_inv * self.a[2]);
        num / den
    }

    /// Run the section over `x` in place, starting from the steady state of a
    /// constant input equal to `x0`.
    fn run(&self, x: &mut [f64], x0: f64) {
        let g = self.dc_gain();
        let mut z2 = (self.b[2] - self.a[2] * g) * x0;
        let mut z1 = (self.b[1] - self.a[1] * g) * x0 + z2;
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z1;
            z1 = self.b[1] * input - self.a[1] * y + z2;
            z2 = self.b[2] * input - self.a[2] * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Section>,
    order: usize,
    fs: f64,
}

impl Butterworth {
    /// Lowpass design via the bilinear transform with a prewarped cutoff.
    pub fn lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("filter order must be >= 1".into()));
        }
        let nyquist = fs / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
            return Err(Error::CutoffOutOfRange {
                cutoff_hz,
                nyquist_hz: nyquist,
            });
        }
        // analog cutoff after prewarping, with the bilinear constant folded to 1
        let wa = (PI * cutoff_hz / fs).tan();
        let wa2 = wa * wa;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let alpha = 2.0 * wa * (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin();
            let a0 = 1.0 + alpha + wa2;
            sections.push(Section {
                b: [wa2 / a0, 2.0 * wa2 / a0, wa2 / a0],
                a: [1.0, 2.0 * (wa2 - 1.0) / a0, (1.0 - alpha + wa2) / a0],
            });
        }
        if order % 2 == 1 {
            let a0 = 1.0 + wa;
            sections.push(Section {
                b: [wa / a0, wa / a0, 0.0],
                a: [1.0, (wa - 1.0) / a0, 0.0],
            });
        }
        Ok(Self {
            sections,
            order,
            fs,
        })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Single-pass complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / self.fs);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    /// Odd-extension padding length used by [`Butterworth::filtfilt`].
    pub fn pad_len(&self) -> usize {
        let first_order = self.sections.iter().filter(|s| s.is_first_order()).count();
        3 * (2 * self.sections.len() + 1 - first_order)
    }

    /// Causal single pass, initialised at the steady state of `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        if let Some(&x0) = x.first() {
            let mut level = x0;
            for s in &self.sections {
                s.run(&mut y, level);
                level *= s.dc_gain();
            }
        }
        y
    }

    /// Zero-phase forward-backward filtering with odd reflection at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        if x.len() <= pad {
            return Err(Error::TooShort {
                needed: pad + 1,
                got: x.len(),
            });
        }
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }
}

/// Zero-phase Butterworth lowpass of a sampled series.
pub fn butterworth_lowpass(
    series: &SampledSeries,
    cutoff_hz: f64,
    order: usize,
) -> Result<SampledSeries> {
    let filter = Butterworth::lowpass(order, cutoff_hz, series.fs())?;
    series.with_values(filter.filtfilt(series.values())?)
}
