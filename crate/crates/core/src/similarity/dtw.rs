//! Dynamic time warping with the symmetric step set {(1,0), (0,1), (1,1)}
//! and absolute-difference local cost.
//!
//! `gamma(i, j) = |x_i - y_j| + min(gamma(i-1, j), gamma(i, j-1), gamma(i-1, j-1))`
//! with `gamma(0, 0) = |x_0 - y_0|`; the distance is `gamma(n-1, m-1)`.
//! Indices here are zero-based.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FilterState;
use crate::error::{Error, Result};
use crate::ingest::{AlignedPanel, AssetId};

/// Row-major `n x m` cumulative cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost_matrix: CostMatrix,
    /// Optimal warping path from `(0, 0)` to `(n-1, m-1)`.
    pub path: Vec<(usize, usize)>,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DtwOptions {
    /// Sakoe-Chiba half-width. Widened to `|n - m|` when narrower so a path
    /// always exists. `None` leaves the alignment unconstrained.
    #[serde(default)]
    pub band: Option<usize>,
    /// Z-score each series before warping.
    #[serde(default)]
    pub standardize: bool,
}

fn band_limits(i: usize, n: usize, m: usize, band: Option<usize>) -> (usize, usize) {
    match band {
        None => (0, m),
        Some(w) => {
            let w = w.max(n.abs_diff(m));
            (i.saturating_sub(w), (i + w + 1).min(m))
        }
    }
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::insufficient("DTW", 1, x.len().min(y.len())));
    }
    Ok(())
}

/// Full DTW with cost matrix and backtracked path.
pub fn dtw(x: &[f64], y: &[f64]) -> Result<DtwResult> {
    dtw_with_options(x, y, None)
}

pub fn dtw_with_options(x: &[f64], y: &[f64], band: Option<usize>) -> Result<DtwResult> {
    check_inputs(x, y)?;
    let (n, m) = (x.len(), y.len());
    let mut data = vec![f64::INFINITY; n * m];
    for i in 0..n {
        let (lo, hi) = band_limits(i, n, m, band);
        for j in lo..hi {
            let cost = (x[i] - y[j]).abs();
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { data[(i - 1) * m + j] } else { f64::INFINITY };
                let left = if j > 0 { data[i * m + j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { data[(i - 1) * m + j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            data[i * m + j] = cost + prev;
        }
    }
    let cost_matrix = CostMatrix { rows: n, cols: m, data };
    let path = backtrack(&cost_matrix);
    debug_assert!(validate_path(&path, n, m).is_ok());
    Ok(DtwResult { distance: cost_matrix.get(n - 1, m - 1), path, cost_matrix })
}

// Ties prefer the diagonal, then (i-1, j), then (i, j-1).
fn backtrack(c: &CostMatrix) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (c.rows - 1, c.cols - 1);
    let mut path = vec![(i, j)];
    while (i, j) != (0, 0) {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = c.get(i - 1, j - 1);
            let up = c.get(i - 1, j);
            let left = c.get(i, j - 1);
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    path
}

/// Distance only, in two rolling rows of memory.
pub fn dtw_distance(x: &[f64], y: &[f64], band: Option<usize>) -> Result<f64> {
    check_inputs(x, y)?;
    let (n, m) = (x.len(), y.len());
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for i in 0..n {
        let (lo, hi) = band_limits(i, n, m, band);
        curr.iter_mut().for_each(|c| *c = f64::INFINITY);
        for j in lo..hi {
            let cost = (x[i] - y[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if j > 0 { curr[j - 1] } else { f64::INFINITY };
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                diag.min(prev[j]).min(left)
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Checks the boundary, continuity and monotonicity conditions of a warping path.
pub fn validate_path(path: &[(usize, usize)], n: usize, m: usize) -> Result<()> {
    let fail = |msg: String| Err(Error::Contract(msg));
    match (path.first(), path.last()) {
        (Some(&(0, 0)), Some(&last)) if last == (n - 1, m - 1) => {}
        _ => return fail(format!("path must run from (0,0) to ({},{})", n - 1, m - 1)),
    }
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 < a.0 || b.1 < a.1 {
            return fail(format!("non-monotone step {a:?} -> {b:?}"));
        }
        let step = (b.0 - a.0, b.1 - a.1);
        if !matches!(step, (1, 0) | (0, 1) | (1, 1)) {
            return fail(format!("discontinuous step {a:?} -> {b:?}"));
        }
    }
    Ok(())
}

/// DTW distances over one period, normalized by the largest distance among
/// baseline pairs so that pair maps to exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwMatrix {
    pub assets: Vec<AssetId>,
    pub values: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
    pub baseline: Vec<AssetId>,
    pub baseline_max: f64,
    pub period: String,
    pub filter_state: FilterState,
}

pub(crate) fn zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    if sd == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

pub fn dtw_matrix(
    panel: &AlignedPanel,
    baseline: &[AssetId],
    period: impl Into<String>,
    filter_state: FilterState,
    options: DtwOptions,
) -> Result<DtwMatrix> {
    if baseline.len() < 2 {
        return Err(Error::insufficient("DTW baseline assets", 2, baseline.len()));
    }
    let base_idx = baseline
        .iter()
        .map(|a| panel.asset_index(a).ok_or_else(|| Error::Config(format!("baseline asset {a} not in panel"))))
        .collect::<Result<Vec<_>>>()?;
    if panel.n_dates() == 0 {
        return Err(Error::insufficient("DTW matrix (dates)", 1, 0));
    }

    let cols: Vec<Vec<f64>> = if options.standardize {
        panel.columns().iter().map(|c| zscore(c)).collect()
    } else {
        panel.columns().to_vec()
    };
    let k = cols.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| dtw_distance(&cols[i], &cols[j], options.band))
        .collect::<Result<Vec<f64>>>()?;

    let mut raw = vec![vec![0.0; k]; k];
    for (&(i, j), d) in pairs.iter().zip(distances) {
        raw[i][j] = d;
        raw[j][i] = d;
    }
    let mut baseline_max = 0.0f64;
    for (a, &i) in base_idx.iter().enumerate() {
        for &j in &base_idx[a + 1..] {
            baseline_max = baseline_max.max(raw[i][j]);
        }
    }
    if !(baseline_max > 0.0) {
        return Err(Error::Normalization("all baseline DTW distances are zero".into()));
    }
    let values = raw.iter().map(|row| row.iter().map(|d| d / baseline_max).collect()).collect();
    Ok(DtwMatrix {
        assets: panel.assets().to_vec(),
        values,
        raw,
        baseline: baseline.to_vec(),
        baseline_max,
        period: period.into(),
        filter_state,
    })
}

#[cfg(test)]
mod tests {
    use chrono::{Days, NaiveDate};
    use proptest::prelude::*;

    use super::*;

    fn path_cost(x: &[f64], y: &[f64], path: &[(usize, usize)]) -> f64 {
        path.iter().map(|&(i, j)| (x[i] - y[j]).abs()).sum()
    }

    #[test]
    fn self_alignment_is_diagonal() {
        let x = [0.3, -1.0, 2.5, 2.5, 0.0];
        let r = dtw(&x, &x).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.path, (0..5).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn constant_expansion() {
        let r = dtw(&[0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.path, vec![(0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn small_hand_case() {
        // x = (1, 3), y = (1, 2, 3). Two optimal paths of cost 1; at (1, 2)
        // the diagonal predecessor (0, 1) ties with (1, 1) and wins.
        let r = dtw(&[1.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.distance, 1.0);
        assert_eq!(r.path, vec![(0, 0), (0, 1), (1, 2)]);
        assert_eq!(r.cost_matrix.get(0, 2), 0.0 + 1.0 + 2.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(dtw(&[], &[1.0]), Err(Error::InsufficientData { .. })));
        assert!(dtw_distance(&[1.0], &[], None).is_err());
    }

    #[test]
    fn validator_catches_bad_paths() {
        assert!(validate_path(&[(0, 0), (1, 1)], 2, 2).is_ok());
        assert!(validate_path(&[(0, 0), (1, 2)], 2, 3).is_err());
        assert!(validate_path(&[(0, 1), (1, 1)], 2, 2).is_err());
        assert!(validate_path(&[(0, 0), (1, 1), (1, 0), (1, 1)], 2, 2).is_err());
        assert!(validate_path(&[(0, 0), (1, 0)], 2, 2).is_err());
    }

    fn toy_panel() -> AlignedPanel {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..3).map(|i| start + Days::new(i)).collect();
        AlignedPanel::new(
            vec!["A".into(), "B".into(), "C".into()],
            dates,
            vec![vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 2.0], vec![3.0, 3.0, 3.0]],
        )
        .unwrap()
    }

    #[test]
    fn three_asset_matrix_by_hand() {
        // D(A,B) = 1 (A1-B1), D(A,C) = 3+2+1 = 6, D(B,C) = 3+1+1 = 5.
        let m = dtw_matrix(&toy_panel(), &["A".into(), "C".into()], "2020", FilterState::Pre, DtwOptions::default())
            .unwrap();
        assert_eq!(m.baseline_max, 6.0);
        let expected = [[0.0, 1.0 / 6.0, 1.0], [1.0 / 6.0, 0.0, 5.0 / 6.0], [1.0, 5.0 / 6.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.values[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }

        let bc = dtw_matrix(&toy_panel(), &["A".into(), "B".into()], "2020", FilterState::Pre, DtwOptions::default())
            .unwrap();
        assert_eq!(bc.values[0][1], 1.0);
        assert_eq!(bc.values[0][2], 6.0);
    }

    #[test]
    fn identical_baseline_fails_normalization() {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..3).map(|i| start + Days::new(i)).collect();
        let p = AlignedPanel::new(vec!["A".into(), "B".into()], dates, vec![vec![1.0, 2.0, 0.5]; 2]).unwrap();
        let err = dtw_matrix(&p, &["A".into(), "B".into()], "x", FilterState::Pre, DtwOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Normalization(_)));
        let err = dtw_matrix(&p, &["A".into(), "Z".into()], "x", FilterState::Pre, DtwOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn wide_band_equals_unconstrained() {
        let x = [0.1, 0.5, -0.3, 0.9, 1.2, -0.4];
        let y = [0.0, 0.4, 0.8, -0.1, 1.0];
        let free = dtw(&x, &y).unwrap().distance;
        assert_eq!(dtw_distance(&x, &y, Some(10)).unwrap(), free);
        assert!(dtw_with_options(&x, &y, Some(1)).unwrap().distance >= free);
        assert_eq!(dtw_with_options(&x, &y, Some(1)).unwrap().distance, dtw_distance(&x, &y, Some(1)).unwrap());
    }

    proptest! {
        #[test]
        fn invariants(
            x in prop::collection::vec(-3.0f64..3.0, 1..30),
            y in prop::collection::vec(-3.0f64..3.0, 1..30),
            shift in -10.0f64..10.0,
        ) {
            let r = dtw(&x, &y).unwrap();
            prop_assert!(validate_path(&r.path, x.len(), y.len()).is_ok());
            prop_assert!((path_cost(&x, &y, &r.path) - r.distance).abs() < 1e-9);
            prop_assert_eq!(dtw_distance(&x, &y, None).unwrap(), r.distance);

            let back = dtw(&y, &x).unwrap().distance;
            prop_assert!((back - r.distance).abs() < 1e-9);

            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            prop_assert!((dtw(&xs, &ys).unwrap().distance - r.distance).abs() < 1e-8);

            if x.len() == y.len() {
                let diag: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
                prop_assert!(r.distance <= diag + 1e-12);
            }
        }
    }
}
