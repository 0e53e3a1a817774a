use serde::{Deserialize, Serialize};

use super::ReturnSeries;
use crate::error::{Error, Result};

/// Descriptive statistics of a return series. Location and scale fields
/// are in percent (x100); skewness and kurtosis are the adjusted
/// Fisher-Pearson estimators, kurtosis in excess form (normal = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// `None` when the series has zero variance.
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub degenerate: bool,
}

pub fn describe(returns: &ReturnSeries) -> Result<StatsSummary> {
    describe_values(returns.values())
}

pub fn describe_values(x: &[f64]) -> Result<StatsSummary> {
    let n = x.len();
    if n < 4 {
        return Err(Error::insufficient("descriptive statistics", 4, n));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite return in series".into()));
    }
    let nf = n as f64;
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (x.iter().sum::<f64>() / nf).clamp(min, max);

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);

    let degenerate = m2 == 0.0 || m2 <= f64::EPSILON * mean * mean;
    let (skewness, kurtosis) = if degenerate {
        (None, None)
    } else {
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let skew = (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1;
        let kurt = (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0);
        (Some(skew), Some(kurt))
    };

    Ok(StatsSummary {
        n,
        mean: mean * 100.0,
        sd: if degenerate { 0.0 } else { sd * 100.0 },
        min: min * 100.0,
        max: max * 100.0,
        skewness,
        kurtosis,
        degenerate,
    })
}
