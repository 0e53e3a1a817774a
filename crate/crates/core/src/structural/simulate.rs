//! Monte Carlo under a stable-coefficient Gaussian regression, used to check
//! the size of the CUSUM tests and the variance profile of their processes.
//!
//! Replication `r` draws from ChaCha stream `r` of the base seed, so results
//! do not depend on thread scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    boundary, cusum_test, ols_cusum, ols_fit, rec_cusum, recursive_residuals, recursive_sigma, BoundaryKind,
    LinearForm, RegressionDesign,
};
use crate::error::Result;

/// `y_t = x_t' beta + sigma e_t` with an intercept and `k - 1` iid N(0,1) regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableDgp {
    pub n: usize,
    pub beta: Vec<f64>,
    pub sigma: f64,
}

impl StableDgp {
    pub fn new(n: usize, k: usize, sigma: f64) -> Self {
        let beta = (0..k).map(|i| 0.5 - 0.1 * i as f64).collect();
        StableDgp { n, beta, sigma }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> RegressionDesign {
        let k = self.k();
        let x = DMatrix::from_fn(self.n, k, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
        let y = (0..self.n)
            .map(|r| {
                let mean: f64 = (0..k).map(|c| x[(r, c)] * self.beta[c]).sum();
                mean + self.sigma * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let names = (0..k).map(|c| if c == 0 { "const".to_string() } else { format!("x{c}") }).collect();
        RegressionDesign::from_parts("SIM".into(), y, x, names, vec![]).expect("well-formed synthetic design")
    }
}

/// Deterministic RNG for replication `rep` of a study seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub tau: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStudy {
    pub replications: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub level: f64,
    /// Share of OLS-CUSUM paths crossing the constant boundary.
    pub rejection_rate: f64,
    /// Across-replication variance of the OLS path (bridge: `tau (1 - tau)`).
    pub ols_variance: Vec<VariancePoint>,
    /// Across-replication variance of the recursive path (Wiener: `tau`).
    pub rec_variance: Vec<VariancePoint>,
}

struct Replication {
    rejected: bool,
    ols_at: Vec<f64>,
    rec_at: Vec<f64>,
}

pub fn size_study(dgp: &StableDgp, replications: usize, seed: u64, level: f64, taus: &[f64]) -> Result<SizeStudy> {
    let reps = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let design = dgp.sample(&mut rng);
            let fit = ols_fit(&design)?;
            let ols_path = ols_cusum(&fit)?;
            let bound = boundary(BoundaryKind::OlsConst, &ols_path.taus, level, LinearForm::Standard)?;
            let rejected = cusum_test(&ols_path, &bound)?.crossed;

            let rec = recursive_residuals(&design)?;
            let rec_path = rec_cusum(&rec.values, recursive_sigma(&rec.values)?)?;
            Ok(Replication {
                rejected,
                ols_at: taus.iter().map(|&t| ols_path.at(t)).collect(),
                rec_at: taus.iter().map(|&t| rec_path.at(t)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let variance_at = |pick: &dyn Fn(&Replication) -> &[f64]| -> Vec<VariancePoint> {
        taus.iter()
            .enumerate()
            .map(|(i, &tau)| {
                let vals: Vec<f64> = reps.iter().map(|r| pick(r)[i]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let variance = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
                VariancePoint { tau, variance }
            })
            .collect()
    };

    Ok(SizeStudy {
        replications,
        n: dgp.n,
        k: dgp.k(),
        seed,
        level,
        rejection_rate: reps.iter().filter(|r| r.rejected).count() as f64 / replications as f64,
        ols_variance: variance_at(&|r| &r.ols_at),
        rec_variance: variance_at(&|r| &r.rec_at),
    })
}
