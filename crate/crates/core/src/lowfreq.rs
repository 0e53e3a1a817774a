//! Low-frequency projection onto a truncated cosine basis.
//!
//! A series of length `n` is expanded in the orthonormal DCT-II basis
//! `psi_k(j) = c_k cos(pi (j + 1/2) k / n)`, `c_0 = sqrt(1/n)`, `c_k = sqrt(2/n)`,
//! and only the first `q` coefficients are kept. The kept span contains
//! cycles longer than `2n/q` observations, so the projection removes
//! anything faster than that period. It is an orthogonal projection:
//! idempotent, linear, mean preserving and norm non-increasing.
//!
//! The transform pair is computed in `O(n log n)` with a single complex FFT
//! of a reordered copy of the input.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormal DCT-II coefficients, lowest frequency first.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineCoefficients {
    values: Vec<f64>,
}

impl CosineCoefficients {
    pub fn new(values: Vec<f64>) -> Self {
        CosineCoefficients { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis_order(&self) -> usize {
        self.values.len()
    }

    /// Zeroes every coefficient past the first `q`.
    pub fn truncate(&mut self, q: usize) {
        for v in self.values.iter_mut().skip(q) {
            *v = 0.0;
        }
    }
}

/// Truncation order and the cutoff it implies for a sample of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub n: usize,
    pub q: usize,
    /// Shortest retained cycle, `2n/q` observations.
    pub cutoff_period: f64,
    /// `q / (2n)` cycles per observation.
    pub cutoff_frequency: f64,
}

/// Default truncation order `floor(n/10) + 3`.
pub fn truncation_order(n: usize) -> Result<usize> {
    if n < 10 {
        return Err(Error::Domain(format!("truncation order needs n >= 10, got {n}")));
    }
    Ok(n / 10 + 3)
}

pub fn filter_spec(n: usize, q: usize) -> Result<FilterSpec> {
    check_order(n, q)?;
    Ok(FilterSpec {
        n,
        q,
        cutoff_period: 2.0 * n as f64 / q as f64,
        cutoff_frequency: q as f64 / (2.0 * n as f64),
    })
}

fn check_order(n: usize, q: usize) -> Result<()> {
    if q == 0 || q > n {
        return Err(Error::Domain(format!("truncation order q={q} outside 1..={n}")));
    }
    Ok(())
}

fn scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Orthonormal DCT-II.
pub fn dct(series: &[f64]) -> Result<CosineCoefficients> {
    let n = series.len();
    if n == 0 {
        return Err(Error::insufficient("DCT", 1, 0));
    }
    // Even-indexed samples ascending, then odd-indexed samples descending.
    let mut v = vec![Complex64::default(); n];
    for (m, x) in series.iter().enumerate() {
        let slot = if m % 2 == 0 { m / 2 } else { n - 1 - m / 2 };
        v[slot] = Complex64::new(*x, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut v);

    let values = v
        .iter()
        .enumerate()
        .map(|(k, vk)| {
            let twiddle = Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            scale(k, n) * (twiddle * vk).re
        })
        .collect();
    Ok(CosineCoefficients { values })
}

/// Inverse of [`dct`] (orthonormal DCT-III).
pub fn idct(coefficients: &CosineCoefficients) -> Result<Vec<f64>> {
    let n = coefficients.basis_order();
    if n == 0 {
        return Err(Error::insufficient("inverse DCT", 1, 0));
    }
    let raw: Vec<f64> = coefficients.values.iter().enumerate().map(|(k, c)| c / scale(k, n)).collect();
    let mut v: Vec<Complex64> = (0..n)
        .map(|k| {
            let mirror = if k == 0 { 0.0 } else { raw[n - k] };
            let twiddle = Complex64::from_polar(1.0, PI * k as f64 / (2.0 * n as f64));
            twiddle * Complex64::new(raw[k], -mirror)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut v);

    let inv_n = 1.0 / n as f64;
    let mut out = vec![0.0; n];
    for (m, x) in out.iter_mut().enumerate() {
        let slot = if m % 2 == 0 { m / 2 } else { n - 1 - m / 2 };
        *x = v[slot].re * inv_n;
    }
    Ok(out)
}

/// Projects `series` onto its first `q` cosine basis vectors.
pub fn mw_project(series: &[f64], q: usize) -> Result<Vec<f64>> {
    check_order(series.len(), q)?;
    let mut coef = dct(series)?;
    coef.truncate(q);
    idct(&coef)
}

/// [`mw_project`] with `q` from `q_override` or else [`truncation_order`].
pub fn low_frequency(series: &[f64], q_override: Option<usize>) -> Result<(Vec<f64>, FilterSpec)> {
    let n = series.len();
    let q = match q_override {
        Some(q) => q,
        None => truncation_order(n)?,
    };
    let spec = filter_spec(n, q)?;
    Ok((mw_project(series, q)?, spec))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Dense orthonormal DCT-II matrix, row k = basis vector k.
    fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                (0..n).map(|j| c * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()).collect()
            })
            .collect()
    }

    fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn q_rule() {
        assert_eq!(truncation_order(1420).unwrap(), 145);
        assert_eq!(truncation_order(10).unwrap(), 4);
        assert_eq!(truncation_order(1258).unwrap(), 128);
        assert!(matches!(truncation_order(9), Err(Error::Domain(_))));
    }

    #[test]
    fn cutoff_numbers() {
        let s = filter_spec(1420, 145).unwrap();
        assert!((s.cutoff_period - 2840.0 / 145.0).abs() < 1e-12);
        assert!((s.cutoff_period - 19.586).abs() < 1e-3);
        assert!((s.cutoff_frequency - 0.05106).abs() < 1e-5);
        assert!((s.cutoff_period * s.cutoff_frequency - 1.0).abs() < 1e-15);

        let full = filter_spec(50, 50).unwrap();
        assert_eq!(full.cutoff_period, 2.0);
        assert_eq!(full.cutoff_frequency, 0.5);

        assert!((filter_spec(200, 23).unwrap().cutoff_period - 17.391304347826086).abs() < 1e-12);
        assert!(filter_spec(10, 0).is_err());
        assert!(filter_spec(10, 11).is_err());
    }

    #[test]
    fn three_point_matrix_oracle() {
        // Rows of the 3x3 orthonormal DCT-II matrix applied to (1, 0, -1):
        // k=0: 0; k=1: sqrt(2/3) (cos(pi/6) - cos(5pi/6)) = sqrt(2); k=2: 0.
        let c = dct(&[1.0, 0.0, -1.0]).unwrap();
        let expected = matvec(&dct_matrix(3), &[1.0, 0.0, -1.0]);
        assert!(max_abs_diff(c.values(), &expected) < 1e-12);
        assert!((c.values()[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!(c.values()[0].abs() < 1e-12 && c.values()[2].abs() < 1e-12);
    }

    #[test]
    fn constant_is_dc_only() {
        let c = dct(&[3.0; 11]).unwrap();
        assert!((c.values()[0] - 3.0 * 11f64.sqrt()).abs() < 1e-12);
        assert!(c.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_and_dc_projections() {
        let x = [0.4, -1.3, 2.2, 0.9, -0.1, 5.0, -2.5];
        assert!(max_abs_diff(&mw_project(&x, 7).unwrap(), &x) < 1e-10);
        let mean = x.iter().sum::<f64>() / 7.0;
        assert!(mw_project(&x, 1).unwrap().iter().all(|v| (v - mean).abs() < 1e-12));
        assert!(mw_project(&x, 0).is_err());
        assert!(mw_project(&x, 8).is_err());
    }

    #[test]
    fn fast_cycles_removed_slow_kept() {
        let n = 400;
        let q = 41;
        // Basis vector q-1 has period 2n/(q-1) = 20; vector n/2 has period 4.
        let basis = dct_matrix(n);
        let slow = &basis[q - 1];
        let fast = &basis[n / 2];
        let x: Vec<f64> = slow.iter().zip(fast).map(|(a, b)| a + b).collect();
        let y = mw_project(&x, q).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        assert!(dot(&y, fast).abs() < 0.01);
        assert!(dot(&y, slow) > 0.99);
        assert!(max_abs_diff(&y, slow) < 1e-10);
    }

    #[test]
    fn low_frequency_uses_rule() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let (_, spec) = low_frequency(&x, None).unwrap();
        assert_eq!(spec.q, 13);
        let (_, spec) = low_frequency(&x, Some(20)).unwrap();
        assert_eq!(spec.q, 20);
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(x in prop::collection::vec(-10.0f64..10.0, 1..80)) {
            let got = dct(&x).unwrap();
            let expected = matvec(&dct_matrix(x.len()), &x);
            prop_assert!(max_abs_diff(got.values(), &expected) < 1e-10);
        }

        #[test]
        fn round_trip(x in prop::collection::vec(-10.0f64..10.0, 1..=64)) {
            let back = idct(&dct(&x).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&back, &x) < 1e-10);
        }

        #[test]
        fn projection_properties(
            x in prop::collection::vec(-10.0f64..10.0, 10..120),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            qfrac in 0.0f64..1.0,
        ) {
            let n = x.len();
            let q = 1 + ((n - 1) as f64 * qfrac) as usize;
            let y: Vec<f64> = x.iter().rev().map(|v| v * 0.5 + 1.0).collect();
            let px = mw_project(&x, q).unwrap();
            let py = mw_project(&y, q).unwrap();

            prop_assert!(max_abs_diff(&mw_project(&px, q).unwrap(), &px) < 1e-10);

            let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let lin: Vec<f64> = px.iter().zip(&py).map(|(u, v)| a * u + b * v).collect();
            prop_assert!(max_abs_diff(&mw_project(&combo, q).unwrap(), &lin) < 1e-10);

            let energy = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
            prop_assert!(energy(&px) <= energy(&x) * (1.0 + 1e-12) + 1e-12);

            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!((mean(&px) - mean(&x)).abs() < 1e-10);
        }
    }
}
