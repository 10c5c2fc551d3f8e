//! Simulation–extrapolation for a conditionally Poisson surrogate.
//!
//! The estimator adds Gaussian pseudo-error with per-subject scale
//! `sqrt(lambda) * sigma_i` to the observed densities, refits the regression
//! for each lambda on a grid, averages over B replicates, and extrapolates
//! each coefficient's profile back to lambda = -1.

mod attenuation;
mod extrapolant;
mod profile;
mod variance;

use serde::{Deserialize, Serialize};

pub use attenuation::attenuation_curve;
pub use extrapolant::{
    extrapolate, fit_curve, fit_extrapolant, Extrapolant, ExtrapolantFit, TARGET_LAMBDA,
};
pub use profile::{perturb_surrogate, SimexProfile};
pub use variance::{estimate_error_variances, VarianceMode};

use crate::error::{Error, Result};
use crate::model::{CoefficientVector, Dataset};
use crate::ols::naive_fit;
use crate::rng::RngStream;
use profile::{compute_profile, ProfileInputs};

/// Which quantity receives the pseudo-error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationScale {
    /// Perturb and regress on the density `w / a`.
    #[default]
    Density,
    /// Perturb and regress on the raw count `w`, keeping the density-scale
    /// `sigma_i`. Identical to `Density` when every area is 1.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimexConfig {
    #[serde(default = "default_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_b")]
    pub b_reps: usize,
    #[serde(default = "default_extrapolant")]
    pub extrapolant: Extrapolant,
    #[serde(default)]
    pub variance_mode: VarianceMode,
    #[serde(default)]
    pub perturbation_scale: PerturbationScale,
    /// Keep every per-replicate estimate in the profile.
    #[serde(default)]
    pub keep_raw: bool,
}

fn default_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0]
}

fn default_b() -> usize {
    100
}

fn default_extrapolant() -> Extrapolant {
    Extrapolant::Quadratic
}

impl Default for SimexConfig {
    fn default() -> Self {
        SimexConfig {
            lambda_grid: default_grid(),
            b_reps: default_b(),
            extrapolant: default_extrapolant(),
            variance_mode: VarianceMode::Estimated,
            perturbation_scale: PerturbationScale::Density,
            keep_raw: false,
        }
    }
}

impl SimexConfig {
    /// Checks what the profile step needs: a strictly increasing grid of
    /// non-negative values that contains 0, and at least one replicate.
    pub fn validate_grid(&self) -> Result<()> {
        let g = &self.lambda_grid;
        if g.is_empty() {
            return Err(Error::InvalidParameter("lambda grid is empty".into()));
        }
        if g.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "lambda grid values must be finite and non-negative".into(),
            ));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "lambda grid must be strictly increasing".into(),
            ));
        }
        if !g.contains(&0.0) {
            return Err(Error::InvalidParameter("lambda grid must include 0".into()));
        }
        if self.b_reps == 0 {
            return Err(Error::InvalidParameter("b_reps must be at least 1".into()));
        }
        Ok(())
    }

    /// Full check for an estimate: grid rules plus enough points for the
    /// extrapolant (at least 3, at least 4 for rational).
    pub fn validate(&self) -> Result<()> {
        self.validate_grid()?;
        let need = self.extrapolant.min_grid().max(3);
        if self.lambda_grid.len() < need {
            return Err(Error::InsufficientGrid {
                kind: self.extrapolant.name(),
                got: self.lambda_grid.len(),
                need,
            });
        }
        Ok(())
    }

    fn surrogate(&self, dataset: &Dataset) -> Vec<f64> {
        match self.perturbation_scale {
            PerturbationScale::Density => dataset.densities(),
            PerturbationScale::Count => dataset.counts(),
        }
    }
}

/// Result of the full estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimexEstimate {
    /// Extrapolated coefficients. The residual variance is extrapolated
    /// quadratically and floored at zero.
    pub coefficients: CoefficientVector,
    pub naive: CoefficientVector,
    pub profile: SimexProfile,
    /// One fit per coefficient, in `CoefficientVector::get` order.
    pub fits: Vec<ExtrapolantFit>,
    /// Per-subject pseudo-error scale `sigma_i`.
    pub sigma_hat: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SimexEstimate {
    pub fn fallback_used(&self) -> bool {
        self.fits.iter().any(|f| f.fallback_used)
    }

    pub fn converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

/// Simulation and estimation steps over `cfg.lambda_grid`.
/// Pseudo-errors for grid index `k`, replicate `b` come from
/// `stream.substream(&[k, b])`.
pub fn simex_profile(dataset: &Dataset, cfg: &SimexConfig, stream: &RngStream) -> Result<SimexProfile> {
    cfg.validate_grid()?;
    let sigma_hat = sigma_hat(dataset, cfg)?;
    profile_with_sigma(dataset, cfg, &sigma_hat, stream)
}

fn sigma_hat(dataset: &Dataset, cfg: &SimexConfig) -> Result<Vec<f64>> {
    Ok(cfg
        .variance_mode
        .resolve(dataset)?
        .into_iter()
        .map(f64::sqrt)
        .collect())
}

fn profile_with_sigma(
    dataset: &Dataset,
    cfg: &SimexConfig,
    sigma_hat: &[f64],
    stream: &RngStream,
) -> Result<SimexProfile> {
    let surrogate = cfg.surrogate(dataset);
    compute_profile(
        &ProfileInputs {
            surrogate: &surrogate,
            sigma_hat,
            z: dataset.z(),
            y: dataset.y(),
            lambdas: &cfg.lambda_grid,
            b_reps: cfg.b_reps,
            keep_raw: cfg.keep_raw,
        },
        stream,
    )
}

/// The full estimator: variance estimation, profile, one extrapolant fit per
/// coefficient, and evaluation at lambda = -1.
pub fn poi_simex(dataset: &Dataset, cfg: &SimexConfig, stream: &RngStream) -> Result<SimexEstimate> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if dataset.w().iter().all(|&w| w == 0) {
        warnings.push(
            "every surrogate count is zero; the estimated error variance is 0 \
             and the SIMEX estimate equals the naive fit"
                .to_string(),
        );
    }
    let sigma_hat = sigma_hat(dataset, cfg)?;
    let profile = profile_with_sigma(dataset, cfg, &sigma_hat, stream)?;
    let naive = naive_fit(dataset)?;

    let n_coef = 2 + dataset.p();
    let fits = (0..n_coef)
        .map(|j| fit_extrapolant(&profile, cfg.extrapolant, j))
        .collect::<Result<Vec<_>>>()?;
    let components = fits.iter().map(extrapolate).collect::<Result<Vec<_>>>()?;

    let rv_fit = fit_curve(
        &profile.lambdas,
        &profile.residual_variances(),
        Extrapolant::Quadratic,
    )?;
    let residual_variance = extrapolate(&rv_fit)?.max(0.0);

    for (j, f) in fits.iter().enumerate() {
        if f.fallback_used {
            warnings.push(format!(
                "rational extrapolant for coefficient {j} fell back to quadratic"
            ));
        }
    }

    Ok(SimexEstimate {
        coefficients: CoefficientVector::from_components(&components, residual_variance),
        naive,
        profile,
        fits,
        sigma_hat,
        warnings,
    })
}
