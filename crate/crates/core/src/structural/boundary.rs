use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CusumPath;
use crate::error::{Error, Result};

/// 95% critical value of `sup |B(t)|` used for the constant and sd-shaped boundaries.
pub const DEFAULT_NU: f64 = 1.358;
/// 95% level of the linear Rec-CUSUM boundary.
pub const DEFAULT_LAMBDA: f64 = 0.948;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// `nu`
    OlsConst,
    /// `2 nu sqrt(t (1 - t))`
    OlsSd,
    /// `lambda (1 + 2t)`, or `lambda (2t - 1)` under [`LinearForm::AsPrinted`]
    RecLinear,
    /// `2 nu sqrt(t)`
    RecSd,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::OlsConst => "ols-const",
            BoundaryKind::OlsSd => "ols-sd",
            BoundaryKind::RecLinear => "rec-linear",
            BoundaryKind::RecSd => "rec-sd",
        }
    }

    pub fn default_level(self) -> f64 {
        match self {
            BoundaryKind::RecLinear => DEFAULT_LAMBDA,
            _ => DEFAULT_NU,
        }
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols-const" => Ok(BoundaryKind::OlsConst),
            "ols-sd" => Ok(BoundaryKind::OlsSd),
            "rec-linear" => Ok(BoundaryKind::RecLinear),
            "rec-sd" => Ok(BoundaryKind::RecSd),
            other => Err(Error::Config(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// Shape of the linear Rec-CUSUM boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearForm {
    /// `lambda (1 + 2t)`, the Brown-Durbin-Evans line.
    #[default]
    Standard,
    /// `lambda (2t - 1)`; negative below `t = 1/2`, so it flags a crossing at once.
    AsPrinted,
}

/// Boundary values on a tau grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub level: f64,
    pub linear_form: LinearForm,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn boundary(kind: BoundaryKind, taus: &[f64], level: f64, linear_form: LinearForm) -> Result<BoundaryCurve> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Domain(format!("boundary level must be positive, got {level}")));
    }
    let f = |t: f64| match kind {
        BoundaryKind::OlsConst => level,
        BoundaryKind::OlsSd => 2.0 * level * (t * (1.0 - t)).max(0.0).sqrt(),
        BoundaryKind::RecLinear => match linear_form {
            LinearForm::Standard => level * (1.0 + 2.0 * t),
            LinearForm::AsPrinted => level * (2.0 * t - 1.0),
        },
        BoundaryKind::RecSd => 2.0 * level * t.max(0.0).sqrt(),
    };
    Ok(BoundaryCurve { kind, level, linear_form, taus: taus.to_vec(), values: taus.iter().map(|&t| f(t)).collect() })
}

/// Verdict of one fluctuation process against one boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumOutcome {
    pub path: CusumPath,
    pub boundary: BoundaryCurve,
    /// `max |W(tau)|` over the grid.
    pub sup_statistic: f64,
    pub crossed: bool,
    pub first_crossing_tau: Option<f64>,
}

pub fn cusum_test(path: &CusumPath, boundary: &BoundaryCurve) -> Result<CusumOutcome> {
    if path.taus.len() != boundary.taus.len()
        || path.taus.iter().zip(&boundary.taus).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::Contract("CUSUM path and boundary are on different grids".into()));
    }
    let sup_statistic = path.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first_crossing_tau = path
        .values
        .iter()
        .zip(&boundary.values)
        .zip(&path.taus)
        .find(|((w, b), _)| w.abs() > **b)
        .map(|(_, &t)| t);
    Ok(CusumOutcome {
        path: path.clone(),
        boundary: boundary.clone(),
        sup_statistic,
        crossed: first_crossing_tau.is_some(),
        first_crossing_tau,
    })
}
