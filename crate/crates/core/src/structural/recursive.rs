use nalgebra::{DMatrix, DVector};

use super::RegressionDesign;
use crate::error::{Error, Result};

/// Standardized one-step-ahead forecast errors.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveResiduals {
    pub values: Vec<f64>,
    /// Zero-based design row of the first residual. Equals `k` unless the
    /// leading moment matrix was singular and the start moved forward.
    pub start: usize,
}

/// `w_t = (y_t - x_t' b_{t-1}) / sqrt(1 + x_t' (X'X)_{t-1}^{-1} x_t)` for every
/// row after the first `k` (or the first full-rank prefix).
///
/// The inverse moment matrix and coefficients are carried forward with
/// rank-one (Sherman-Morrison) updates.
pub fn recursive_residuals(design: &RegressionDesign) -> Result<RecursiveResiduals> {
    let (rows, k) = (design.rows(), design.k());
    if rows < k + 1 {
        return Err(Error::insufficient("recursive residuals", k + 1, rows));
    }
    let x = design.regressors();
    let y = design.response();

    // Smallest prefix whose moment matrix is positive definite.
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    let mut start = None;
    let mut chol = None;
    for t in 0..rows {
        let row = x.row(t).transpose();
        xtx += &row * row.transpose();
        xty += &row * y[t];
        if t + 1 >= k {
            if let Some(c) = xtx.clone().cholesky().filter(well_conditioned) {
                start = Some(t + 1);
                chol = Some(c);
                break;
            }
        }
    }
    let (start, chol) = match (start, chol) {
        (Some(s), Some(c)) if s < rows => (s, c),
        _ => return Err(Error::Singular("moment matrix never reaches full rank".into())),
    };
    if start > k {
        log::info!("{}: leading moment matrix singular, recursive residuals start at row {start}", design.target());
    }

    let mut beta = chol.solve(&xty);
    let mut p = chol.inverse();
    let mut values = Vec::with_capacity(rows - start);
    for t in start..rows {
        let xt = x.row(t).transpose();
        let px = &p * &xt;
        let f = 1.0 + xt.dot(&px);
        let err = y[t] - xt.dot(&beta);
        values.push(err / f.sqrt());

        let gain = &px / f;
        beta += &gain * err;
        p -= &gain * px.transpose();
        p = (&p + p.transpose()) * 0.5;
    }
    super::snap_exact(&mut values, &y[start..]);
    Ok(RecursiveResiduals { values, start })
}

fn well_conditioned(c: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> bool {
    let d = c.l_dirty().diagonal();
    let max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    min > 1e-7 * max
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn design(x: DMatrix<f64>, y: Vec<f64>) -> RegressionDesign {
        let names = (0..x.ncols()).map(|i| format!("x{i}")).collect();
        RegressionDesign::from_parts("Y".into(), y, x, names, vec![]).unwrap()
    }

    /// Refits OLS from scratch on rows `0..t` for every forecast.
    fn refit_oracle(x: &DMatrix<f64>, y: &[f64], start: usize) -> Vec<f64> {
        (start..x.nrows())
            .map(|t| {
                let xs = x.rows(0, t).into_owned();
                let inv = (xs.transpose() * &xs).try_inverse().unwrap();
                let b = &inv * xs.transpose() * DVector::from_column_slice(&y[..t]);
                let xt = x.row(t).transpose();
                (y[t] - xt.dot(&b)) / (1.0 + xt.dot(&(&inv * &xt))).sqrt()
            })
            .collect()
    }

    #[test]
    fn intercept_only_by_hand() {
        let r = recursive_residuals(&design(DMatrix::from_element(2, 1, 1.0), vec![1.0, 3.0])).unwrap();
        assert_eq!(r.start, 1);
        assert!((r.values[0] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn noiseless_model_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(200, 5, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
        let y: Vec<f64> = (0..200).map(|r| 0.3 + x[(r, 1)] - 0.5 * x[(r, 2)] + 2.0 * x[(r, 4)]).collect();
        let r = recursive_residuals(&design(x, y)).unwrap();
        assert_eq!(r.values.len(), 195);
        assert!(r.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn matches_refit_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = DMatrix::from_fn(120, 4, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
        let y: Vec<f64> = (0..120).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = recursive_residuals(&design(x.clone(), y.clone())).unwrap();
        let oracle = refit_oracle(&x, &y, 4);
        for (a, b) in r.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn singular_prefix_shifts_start() {
        // Second regressor is zero for the first five rows.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(30, 2, |r, c| if c == 0 { 1.0 } else if r < 5 { 0.0 } else { rng.random_range(-1.0..1.0) });
        let y: Vec<f64> = (0..30).map(|r| r as f64 * 0.1).collect();
        let r = recursive_residuals(&design(x.clone(), y.clone())).unwrap();
        assert_eq!(r.start, 6);
        assert_eq!(r.values.len(), 24);
        let oracle = refit_oracle(&x, &y, 6);
        for (a, b) in r.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn never_full_rank() {
        let x = DMatrix::from_fn(10, 2, |_, _| 1.0);
        assert!(matches!(recursive_residuals(&design(x, vec![0.0; 10])), Err(Error::Singular(_))));
    }
}
