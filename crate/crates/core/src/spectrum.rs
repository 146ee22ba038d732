//! Power spectra of real correlation traces on uniform τ grids.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub window: Window,
    /// Zero-padding factor applied before the FFT.
    pub zero_pad: usize,
    pub subtract_mean: bool,
    /// Frequencies are reported divided by this value (e.g. ω0).
    pub frequency_unit: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            window: Window::Hann,
            zero_pad: 16,
            subtract_mean: true,
            frequency_unit: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub window: Window,
    /// Natural resolution 2π/(N Δτ) of the unpadded trace, in reporting units.
    pub bin_width: f64,
}

/// Checks that `taus` is uniform and returns its spacing.
pub fn uniform_spacing(taus: &[f64]) -> Result<f64> {
    if taus.len() < 2 {
        return Err(Error::invalid("need at least two τ samples"));
    }
    let d = (taus[taus.len() - 1] - taus[0]) / (taus.len() - 1) as f64;
    if !(d > 0.0) {
        return Err(Error::invalid("τ grid must be increasing"));
    }
    for (k, t) in taus.iter().enumerate() {
        if (t - (taus[0] + k as f64 * d)).abs() > 1e-9 * d.max(t.abs()) {
            return Err(Error::invalid(format!(
                "τ grid is not uniform at sample {k}"
            )));
        }
    }
    Ok(d)
}

pub fn autocorrelation_spectrum(trace: &[f64], tau_spacing: f64) -> Result<SpectrumReport> {
    autocorrelation_spectrum_with(trace, tau_spacing, &SpectrumOptions::default())
}

pub fn autocorrelation_spectrum_with(
    trace: &[f64],
    tau_spacing: f64,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport> {
    let n = trace.len();
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "spectrum needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if !(tau_spacing > 0.0 && tau_spacing.is_finite()) {
        return Err(Error::invalid("τ spacing must be positive"));
    }
    if !(opts.frequency_unit > 0.0) || opts.zero_pad == 0 {
        return Err(Error::invalid(
            "frequency unit and zero padding must be positive",
        ));
    }
    let mean = if opts.subtract_mean {
        trace.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let m = n * opts.zero_pad;
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for (k, (b, &x)) in buf.iter_mut().zip(trace).enumerate() {
        let w = match opts.window {
            Window::Hann => {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()
            }
            Window::Rectangular => 1.0,
        };
        *b = Complex::new(w * (x - mean), 0.0);
    }
    FftPlanner::<f64>::new()
        .plan_fft_forward(m)
        .process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (m as f64 * tau_spacing) / opts.frequency_unit;
    let half = m / 2 + 1;
    Ok(SpectrumReport {
        frequencies: (0..half).map(|k| k as f64 * dw).collect(),
        power: buf[..half].iter().map(|z| z.norm_sqr()).collect(),
        window: opts.window,
        bin_width: dw * opts.zero_pad as f64,
    })
}

impl SpectrumReport {
    /// Location of the highest local maximum above `min_frequency`, refined
    /// by a parabola through the three top samples.
    pub fn dominant_peak(&self, min_frequency: f64) -> Option<f64> {
        let p = &self.power;
        let f = &self.frequencies;
        let best = (1..p.len().saturating_sub(1))
            .filter(|&k| f[k] >= min_frequency && p[k] >= p[k - 1] && p[k] >= p[k + 1])
            .max_by(|&a, &b| p[a].total_cmp(&p[b]))?;
        let (l, c, r) = (p[best - 1], p[best], p[best + 1]);
        let denom = l - 2.0 * c + r;
        let shift = if denom < 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        };
        Some(f[best] + shift * (f[1] - f[0]))
    }

    /// Copy scaled to unit maximum power.
    pub fn normalized(&self) -> SpectrumReport {
        let max = self.power.iter().fold(0.0f64, |m, &v| m.max(v));
        let scale = if max > 0.0 { 1.0 / max } else { 1.0 };
        SpectrumReport {
            power: self.power.iter().map(|v| v * scale).collect(),
            ..self.clone()
        }
    }
}
