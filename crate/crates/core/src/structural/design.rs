use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{AlignedPanel, AssetId};

/// Regressor assets whose lagged returns explain the target.
pub const KEY_ASSETS: [&str; 5] = ["JPY", "EUR", "GOLD", "S&P500", "MSCI"];

/// `y_t = X_t' beta + e_t` with an intercept in the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDesign {
    target: AssetId,
    response: Vec<f64>,
    regressors: DMatrix<f64>,
    names: Vec<String>,
    dates: Vec<NaiveDate>,
}

impl RegressionDesign {
    /// Assembles a design directly; the first regressor column must be all ones.
    pub fn from_parts(
        target: AssetId,
        response: Vec<f64>,
        regressors: DMatrix<f64>,
        names: Vec<String>,
        dates: Vec<NaiveDate>,
    ) -> Result<Self> {
        if regressors.nrows() != response.len() {
            return Err(Error::Design(format!(
                "{} regressor rows for {} responses",
                regressors.nrows(),
                response.len()
            )));
        }
        if regressors.ncols() == 0 || regressors.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::Design("first regressor column must be the intercept".into()));
        }
        if names.len() != regressors.ncols() {
            return Err(Error::Design(format!("{} names for {} columns", names.len(), regressors.ncols())));
        }
        if !dates.is_empty() && dates.len() != response.len() {
            return Err(Error::Design(format!("{} dates for {} rows", dates.len(), response.len())));
        }
        Ok(RegressionDesign { target, response, regressors, names, dates })
    }

    pub fn target(&self) -> &AssetId {
        &self.target
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.regressors
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Date of each response row (empty for synthetic designs).
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rows(&self) -> usize {
        self.response.len()
    }

    /// Number of regressors including the intercept.
    pub fn k(&self) -> usize {
        self.regressors.ncols()
    }
}

/// Regresses the target's return on an intercept, its own lag and the lags
/// of every key asset. A key asset that is the target appears once.
pub fn build_design(panel: &AlignedPanel, target: &AssetId, key_assets: &[AssetId]) -> Result<RegressionDesign> {
    let y = panel.column(target).ok_or_else(|| Error::Design(format!("target {target} not in panel")))?;
    let mut lagged: Vec<(&AssetId, &[f64])> = vec![(target, y)];
    for key in key_assets {
        if key == target {
            continue;
        }
        let col = panel.column(key).ok_or_else(|| Error::Design(format!("required asset {key} not in panel")))?;
        lagged.push((key, col));
    }
    let t = panel.n_dates();
    if t < 2 {
        return Err(Error::insufficient("regression design (dates)", 2, t));
    }

    let rows = t - 1;
    let k = lagged.len() + 1;
    let regressors = DMatrix::from_fn(rows, k, |r, c| if c == 0 { 1.0 } else { lagged[c - 1].1[r] });
    let mut names = vec!["const".to_string()];
    names.extend(lagged.iter().map(|(a, _)| format!("{a}_lag1")));
    RegressionDesign::from_parts(target.clone(), y[1..].to_vec(), regressors, names, panel.dates()[1..].to_vec())
}
