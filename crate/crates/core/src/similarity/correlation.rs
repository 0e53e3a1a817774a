use serde::{Deserialize, Serialize};

use super::FilterState;
use crate::error::{Error, Result};
use crate::ingest::{AlignedPanel, AssetId};

/// Sample Pearson correlation of two equally long series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!("pearson on lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::insufficient("pearson correlation", 2, x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("constant series has no correlation".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations over one period. Pairs involving a
/// constant column are `None` rather than failing the whole matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub assets: Vec<AssetId>,
    pub values: Vec<Vec<Option<f64>>>,
    pub period: String,
    pub filter_state: FilterState,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &AssetId, b: &AssetId) -> Option<f64> {
        let i = self.assets.iter().position(|x| x == a)?;
        let j = self.assets.iter().position(|x| x == b)?;
        self.values[i][j]
    }
}

pub fn correlation_matrix(
    panel: &AlignedPanel,
    period: impl Into<String>,
    filter_state: FilterState,
) -> Result<CorrelationMatrix> {
    let k = panel.n_assets();
    if k < 2 {
        return Err(Error::insufficient("correlation matrix (assets)", 2, k));
    }
    if panel.n_dates() < 2 {
        return Err(Error::insufficient("correlation matrix (dates)", 2, panel.n_dates()));
    }
    let cols = panel.columns();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = match pearson(&cols[i], &cols[j]) {
                Ok(r) => Some(if i == j { 1.0 } else { r }),
                Err(Error::Degenerate(_)) => {
                    log::warn!("degenerate variance for pair {} / {}", panel.assets()[i], panel.assets()[j]);
                    None
                }
                Err(e) => return Err(e),
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { assets: panel.assets().to_vec(), values, period: period.into(), filter_state })
}
