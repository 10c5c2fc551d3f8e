//! Simulation and estimation steps: regressions on pseudo-surrogates with
//! added Gaussian error at each lambda.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::CoefficientVector;
use crate::ols::ols_fit;
use crate::rng::RngStream;
use crate::sampling::sample_normal;

/// Averaged coefficient estimates along the lambda grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimexProfile {
    pub lambdas: Vec<f64>,
    /// One entry per lambda: the mean over the B pseudo-replicates.
    pub mean_estimates: Vec<CoefficientVector>,
    /// Per-replicate estimates indexed `[b][lambda index]`, when retained.
    pub raw_estimates: Option<Vec<Vec<CoefficientVector>>>,
}

impl SimexProfile {
    /// The profile of coefficient `index` (0 = intercept, 1 = beta_x,
    /// 2.. = beta_z).
    pub fn series(&self, index: usize) -> Option<Vec<f64>> {
        self.mean_estimates.iter().map(|c| c.get(index)).collect()
    }

    pub fn residual_variances(&self) -> Vec<f64> {
        self.mean_estimates
            .iter()
            .map(|c| c.residual_variance)
            .collect()
    }
}

/// `v_i + sqrt(lambda) * sigma_i * u_i` with fresh standard normals `u`.
/// `lambda = 0` returns `v` untouched.
pub fn perturb_surrogate(
    v: &[f64],
    lambda: f64,
    sigma_hat: &[f64],
    stream: &mut RngStream,
) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    if v.len() != sigma_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} surrogate values but {} error scales",
            v.len(),
            sigma_hat.len()
        )));
    }
    if lambda == 0.0 {
        return Ok(v.to_vec());
    }
    let root = lambda.sqrt();
    let u = sample_normal(stream, 0.0, 1.0, v.len())?;
    Ok(v.iter()
        .zip(sigma_hat)
        .zip(u)
        .map(|((vi, si), ui)| vi + root * si * ui)
        .collect())
}

/// Inputs to one profile computation, with the surrogate already chosen.
pub(crate) struct ProfileInputs<'a> {
    pub surrogate: &'a [f64],
    pub sigma_hat: &'a [f64],
    pub z: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub lambdas: &'a [f64],
    pub b_reps: usize,
    pub keep_raw: bool,
}

/// Runs the B × grid pseudo-regressions. Replicate `b` at grid index `k`
/// draws from `stream.substream(&[k, b])`, so the work can be spread over
/// threads without changing any value.
pub(crate) fn compute_profile(inp: &ProfileInputs<'_>, stream: &RngStream) -> Result<SimexProfile> {
    if inp.b_reps == 0 {
        return Err(Error::InvalidParameter("b_reps must be at least 1".into()));
    }
    let noiseless = inp.sigma_hat.iter().all(|&s| s == 0.0);
    let base = ols_fit(inp.surrogate, inp.z, inp.y)?;

    let jobs: Vec<(usize, usize)> = inp
        .lambdas
        .iter()
        .enumerate()
        .filter(|(_, &l)| !(l == 0.0 || noiseless))
        .flat_map(|(k, _)| (0..inp.b_reps).map(move |b| (k, b)))
        .collect();

    let results: Vec<Result<CoefficientVector>> = jobs
        .par_iter()
        .map(|&(k, b)| {
            let lambda = inp.lambdas[k];
            let mut sub = stream.substream(&[k as u64, b as u64]);
            perturb_surrogate(inp.surrogate, lambda, inp.sigma_hat, &mut sub)
                .and_then(|w| ols_fit(&w, inp.z, inp.y))
                .map_err(|e| Error::PseudoReplicate {
                    lambda,
                    b,
                    source: Box::new(e),
                })
        })
        .collect();

    // raw[b][k]; identity perturbations reuse the base fit
    let mut raw: Vec<Vec<Option<CoefficientVector>>> = vec![vec![None; inp.lambdas.len()]; inp.b_reps];
    for (&(k, b), r) in jobs.iter().zip(results) {
        raw[b][k] = Some(r?);
    }

    let mut mean_estimates = Vec::with_capacity(inp.lambdas.len());
    for (k, &lambda) in inp.lambdas.iter().enumerate() {
        if lambda == 0.0 || noiseless {
            mean_estimates.push(base.clone());
        } else {
            let column: Vec<CoefficientVector> =
                raw.iter().map(|row| row[k].clone().expect("filled above")).collect();
            mean_estimates.push(CoefficientVector::mean(&column)?);
        }
    }

    let raw_estimates = inp.keep_raw.then(|| {
        raw.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| c.unwrap_or_else(|| base.clone()))
                    .collect()
            })
            .collect()
    });

    Ok(SimexProfile {
        lambdas: inp.lambdas.to_vec(),
        mean_estimates,
        raw_estimates,
    })
}
