//! Discrete Fourier transform and raw periodogram.
//!
//! Indices follow the one-based convention `Q_k = sum_{j=1..n} r_j exp(-2 pi i j k / n)`
//! for `k = 1..n`, which differs from the zero-based FFT output by the phase
//! factor `exp(-2 pi i k / n)`; magnitudes, and so the PSD, are unaffected.
//! The density on bin `k` is `I(f_k) = 2 dt^2 / n * |Q_k|^2` at `f_k = k / (n dt)`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling interval applied to daily data unless configured otherwise.
pub const DEFAULT_SAMPLING_INTERVAL: f64 = 100.0;

/// DFT coefficients `Q_1..Q_n` of a real series.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    coefficients: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Q_k` for `k` in `1..=n`.
    pub fn get(&self, k: usize) -> Complex64 {
        assert!(k >= 1 && k <= self.len(), "bin {k} outside 1..={}", self.len());
        self.coefficients[k - 1]
    }

    /// Coefficients in order `Q_1, ..., Q_n`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }
}

/// DFT of a real series via FFT (any length).
pub fn dft(series: &[f64]) -> Result<ComplexSpectrum> {
    let n = series.len();
    if n == 0 {
        return Err(Error::insufficient("DFT", 1, 0));
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // buf[m] = X_m (zero-based). Q_k = exp(-2 pi i k/n) X_{k mod n}.
    let coefficients = (1..=n)
        .map(|k| {
            let phase = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
            phase * buf[k % n]
        })
        .collect();
    Ok(ComplexSpectrum { coefficients })
}

/// Nyquist frequency `1 / (2 dt)`.
pub fn nyquist(sampling_interval: f64) -> f64 {
    1.0 / (2.0 * sampling_interval)
}

/// Power spectral density on the full frequency grid `k = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDensity {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub sampling_interval: f64,
    pub nyquist: f64,
}

impl SpectrumDensity {
    pub fn n(&self) -> usize {
        self.density.len()
    }

    /// Record length `T = n dt`.
    pub fn duration(&self) -> f64 {
        self.n() as f64 * self.sampling_interval
    }

    /// Fundamental frequency `1 / T`.
    pub fn base_frequency(&self) -> f64 {
        1.0 / self.duration()
    }

    /// `(f_k, I(f_k))` for `k = 1..=n/2`, the half used for plotting.
    pub fn one_sided(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = self.n() / 2;
        self.frequencies.iter().copied().zip(self.density.iter().copied()).take(half)
    }
}

pub fn psd(series: &[f64], sampling_interval: f64) -> Result<SpectrumDensity> {
    if !(sampling_interval > 0.0 && sampling_interval.is_finite()) {
        return Err(Error::Domain(format!("sampling interval must be positive, got {sampling_interval}")));
    }
    if series.len() < 2 {
        return Err(Error::insufficient("PSD", 2, series.len()));
    }
    let n = series.len();
    let spectrum = dft(series)?;
    let scale = 2.0 * sampling_interval * sampling_interval / n as f64;
    let density = spectrum.coefficients().iter().map(|q| scale * q.norm_sqr()).collect();
    let frequencies = (1..=n).map(|k| k as f64 / (n as f64 * sampling_interval)).collect();
    Ok(SpectrumDensity { frequencies, density, sampling_interval, nyquist: nyquist(sampling_interval) })
}
