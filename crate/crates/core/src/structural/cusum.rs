use serde::{Deserialize, Serialize};

use super::RegressionFit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CusumKind {
    Ols,
    Recursive,
}

impl CusumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CusumKind::Ols => "ols",
            CusumKind::Recursive => "rec",
        }
    }
}

/// Empirical fluctuation process `W_n(tau)` on the grid `tau_j = j/m`, `j = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumPath {
    pub kind: CusumKind,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

impl CusumPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the largest grid point not exceeding `tau`.
    pub fn at(&self, tau: f64) -> f64 {
        let m = self.values.len() - 1;
        let j = ((tau * m as f64) + 1e-9).floor() as usize;
        self.values[j.min(m)]
    }
}

fn scaled_partial_sums(kind: CusumKind, residuals: &[f64], sigma: f64) -> Result<CusumPath> {
    if residuals.len() < 2 {
        return Err(Error::insufficient("CUSUM path", 2, residuals.len()));
    }
    if sigma == 0.0 && residuals.iter().all(|&e| e == 0.0) {
        // Exact fit: no fluctuation to scale.
        let m = residuals.len();
        let taus = (0..=m).map(|j| j as f64 / m as f64).collect();
        return Ok(CusumPath { kind, taus, values: vec![0.0; m + 1] });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate(format!("residual scale must be positive, got {sigma}")));
    }
    let m = residuals.len();
    let norm = 1.0 / (sigma * (m as f64).sqrt());
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for e in residuals {
        acc += e;
        values.push(acc * norm);
    }
    let taus = (0..=m).map(|j| j as f64 / m as f64).collect();
    Ok(CusumPath { kind, taus, values })
}

/// OLS-CUSUM process of a fitted regression, scaled by the fit's residual sd.
pub fn ols_cusum(fit: &RegressionFit) -> Result<CusumPath> {
    ols_cusum_path(&fit.residuals, fit.sigma)
}

/// `W(j/n) = sum_{i<=j} e_i / (sigma sqrt(n))`.
pub fn ols_cusum_path(residuals: &[f64], sigma: f64) -> Result<CusumPath> {
    scaled_partial_sums(CusumKind::Ols, residuals, sigma)
}

/// Rec-CUSUM process of recursive residuals scaled by `sigma`.
pub fn rec_cusum(residuals: &[f64], sigma: f64) -> Result<CusumPath> {
    scaled_partial_sums(CusumKind::Recursive, residuals, sigma)
}

/// Sample standard deviation of recursive residuals, the Rec-CUSUM scale.
pub fn recursive_sigma(residuals: &[f64]) -> Result<f64> {
    let m = residuals.len();
    if m < 2 {
        return Err(Error::insufficient("recursive residual scale", 2, m));
    }
    let mean = residuals.iter().sum::<f64>() / m as f64;
    let var = residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    Ok(var.sqrt())
}
