use nalgebra::DVector;

use super::RegressionDesign;
use crate::error::{Error, Result};

/// Full-sample least squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `sqrt(RSS / (rows - k))`.
    pub sigma: f64,
    pub k: usize,
}

// Relative size of an R diagonal entry below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

pub fn ols_fit(design: &RegressionDesign) -> Result<RegressionFit> {
    let (rows, k) = (design.rows(), design.k());
    if rows <= k {
        return Err(Error::insufficient("OLS fit (rows > regressors)", k + 1, rows));
    }
    let x = design.regressors();
    let y = DVector::from_column_slice(design.response());

    let qr = x.clone().qr();
    let r = qr.r();
    let largest = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(col) = r.diagonal().iter().position(|v| v.abs() <= RANK_TOL * largest.max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular(format!(
            "column `{}` is linearly dependent on earlier regressors",
            design.names()[col]
        )));
    }
    let qty = qr.q().tr_mul(&y);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;

    let mut residuals: Vec<f64> = (&y - x * &beta).iter().copied().collect();
    super::snap_exact(&mut residuals, design.response());
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    Ok(RegressionFit {
        coefficients: beta.iter().copied().collect(),
        residuals,
        sigma: (rss / (rows - k) as f64).sqrt(),
        k,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn design(x: DMatrix<f64>, y: Vec<f64>) -> RegressionDesign {
        let names = (0..x.ncols()).map(|i| format!("x{i}")).collect();
        RegressionDesign::from_parts("Y".into(), y, x, names, vec![]).unwrap()
    }

    #[test]
    fn intercept_only() {
        let fit = ols_fit(&design(DMatrix::from_element(3, 1, 1.0), vec![1.0, 2.0, 3.0])).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-14);
        for (e, want) in fit.residuals.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - want).abs() < 1e-14);
        }
        assert!((fit.sigma - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_linear_has_zero_residuals() {
        let x = DMatrix::from_fn(10, 3, |r, c| if c == 0 { 1.0 } else { ((r * 7 + c * 3) % 5) as f64 - r as f64 * 0.1 });
        let y: Vec<f64> = (0..10).map(|r| 0.5 - 2.0 * x[(r, 1)] + 0.25 * x[(r, 2)]).collect();
        let fit = ols_fit(&design(x, y)).unwrap();
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_normal_equations_with_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(50, 7, |_, c| if c == 0 { 1.0 } else { rng.random_range(-1.0..1.0) });
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fit = ols_fit(&design(x.clone(), y.clone())).unwrap();

        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let oracle = xtx_inv * x.transpose() * DVector::from_vec(y);
        for (a, b) in fit.coefficients.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        let sum: f64 = fit.residuals.iter().sum();
        assert!(sum.abs() < 1e-10);
        for c in 0..7 {
            let dot: f64 = fit.residuals.iter().enumerate().map(|(r, e)| e * x[(r, c)]).sum();
            assert!(dot.abs() < 1e-8);
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let x = DMatrix::from_fn(8, 3, |r, c| match c {
            0 => 1.0,
            1 => r as f64,
            _ => 2.0 * r as f64,
        });
        let err = ols_fit(&design(x, (0..8).map(|v| v as f64).collect())).unwrap_err();
        assert!(matches!(err, Error::Singular(_)), "{err}");
    }

    #[test]
    fn too_few_rows() {
        let err = ols_fit(&design(DMatrix::from_element(2, 2, 1.0), vec![1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));
    }
}
