//! CUSUM tests of coefficient stability in a lagged-returns regression.
//!
//! Two fluctuation processes are built from regression residuals: the
//! OLS-CUSUM (full-sample residuals, Brownian-bridge limit) and the
//! Rec-CUSUM (standardized one-step-ahead forecast errors, Wiener limit).
//! Each is compared against a boundary function; a crossing rejects
//! stability. Critical values come from the Kolmogorov distribution of
//! `sup |B(t)|`.

mod boundary;
mod cusum;
mod design;
mod kolmogorov;
mod ols;
mod recursive;
pub mod simulate;

// Residual norm, relative to the response norm, below which a fit is exact and
// its residuals are reported as zero.
pub(crate) const EXACT_FIT_TOL: f64 = 1e-12;

pub(crate) fn snap_exact(residuals: &mut [f64], response: &[f64]) {
    let norm = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>().sqrt();
    if norm(residuals) <= EXACT_FIT_TOL * norm(response) {
        residuals.iter_mut().for_each(|e| *e = 0.0);
    }
}

pub use boundary::{
    boundary, cusum_test, BoundaryCurve, BoundaryKind, CusumOutcome, LinearForm, DEFAULT_LAMBDA, DEFAULT_NU,
};
pub use cusum::{ols_cusum, ols_cusum_path, rec_cusum, recursive_sigma, CusumKind, CusumPath};
pub use design::{build_design, RegressionDesign, KEY_ASSETS};
pub use kolmogorov::{critical_value, kolmogorov_cdf};
pub use ols::{ols_fit, RegressionFit};
pub use recursive::{recursive_residuals, RecursiveResiduals};
