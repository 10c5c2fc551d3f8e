//! Synthetic data from the linear model with a conditionally Poisson
//! surrogate count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientVector, Dataset, PopulationMoments, SyntheticDataset, Truth};
use crate::rng::RngStream;
use crate::sampling::{sample_gamma, sample_normal, sample_poisson, sample_uniform};

/// How subject areas are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMode {
    Constant(f64),
    PerSubject(Vec<f64>),
}

impl Default for AreaMode {
    fn default() -> Self {
        AreaMode::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Number of subjects. Study templates may omit it; the harness sets it.
    #[serde(default)]
    pub n: usize,
    /// `beta_z` has one entry per error-free covariate column.
    pub beta: CoefficientVector,
    pub sigma_eps: f64,
    pub x_shape: f64,
    pub x_scale: f64,
    pub z_low: f64,
    pub z_high: f64,
    #[serde(default)]
    pub area: AreaMode,
}

impl GenerationConfig {
    /// The reference design: beta = (2, 1, 0.5), sigma_eps = 5,
    /// X ~ Gamma(1, 10), Z ~ Uniform(0.5, 9), unit areas.
    pub fn reference(n: usize) -> Self {
        GenerationConfig {
            n,
            beta: CoefficientVector {
                intercept: 2.0,
                beta_x: 1.0,
                beta_z: vec![0.5],
                residual_variance: 0.0,
            },
            sigma_eps: 5.0,
            x_shape: 1.0,
            x_scale: 10.0,
            z_low: 0.5,
            z_high: 9.0,
            area: AreaMode::Constant(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.sigma_eps > 0.0) || !self.sigma_eps.is_finite() {
            return bad(format!("sigma_eps must be positive, got {}", self.sigma_eps));
        }
        if !(self.x_shape > 0.0) || !(self.x_scale > 0.0) {
            return bad(format!(
                "x_shape and x_scale must be positive, got {} and {}",
                self.x_shape, self.x_scale
            ));
        }
        if !self.beta.beta_z.is_empty() && !(self.z_low < self.z_high) {
            return bad(format!(
                "z_low must be below z_high, got {} and {}",
                self.z_low, self.z_high
            ));
        }
        match &self.area {
            AreaMode::Constant(a) if !(*a > 0.0) || !a.is_finite() => {
                bad(format!("area must be positive, got {a}"))
            }
            AreaMode::PerSubject(v) if v.len() != self.n => bad(format!(
                "per-subject areas have {} entries for n = {}",
                v.len(),
                self.n
            )),
            AreaMode::PerSubject(v) if v.iter().any(|a| !(*a > 0.0) || !a.is_finite()) => {
                bad("every per-subject area must be positive".into())
            }
            _ => Ok(()),
        }
    }

    pub fn areas(&self) -> Vec<f64> {
        match &self.area {
            AreaMode::Constant(a) => vec![*a; self.n],
            AreaMode::PerSubject(v) => v.clone(),
        }
    }

    pub fn moments(&self) -> Result<PopulationMoments> {
        PopulationMoments::gamma(self.x_shape, self.x_scale)
    }

    /// Measurement-error variance of each density `w_i / a_i`, which is
    /// `E[X] / a_i` under the conditional Poisson model.
    pub fn true_error_variances(&self) -> Vec<f64> {
        let mean_x = self.x_shape * self.x_scale;
        self.areas().into_iter().map(|a| mean_x / a).collect()
    }
}

/// Path element under which generator substreams live, kept clear of the
/// small indices callers use for their own substreams.
pub const GENERATOR_TAG: u64 = u64::MAX;

/// Draws one dataset. Each variable comes from its own substream of
/// `stream`: `[GENERATOR_TAG, 0]` for X, `[.., 1]` for the noise, `[.., 2]`
/// for the counts and `[.., 3 + j]` for covariate column `j`.
pub fn generate_dataset(cfg: &GenerationConfig, stream: &RngStream) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let n = cfg.n;
    let x = sample_gamma(&mut stream.substream(&[GENERATOR_TAG, 0]), cfg.x_shape, cfg.x_scale, n)?;
    let eps = sample_normal(&mut stream.substream(&[GENERATOR_TAG, 1]), 0.0, cfg.sigma_eps, n)?;
    let z = (0..cfg.beta.beta_z.len())
        .map(|j| sample_uniform(&mut stream.substream(&[GENERATOR_TAG, 3 + j as u64]), cfg.z_low, cfg.z_high, n))
        .collect::<Result<Vec<_>>>()?;
    let a = cfg.areas();

    let mut count_stream = stream.substream(&[GENERATOR_TAG, 2]);
    let w = x
        .iter()
        .zip(&a)
        .map(|(&xi, &ai)| sample_poisson(&mut count_stream, xi * ai))
        .collect::<Result<Vec<_>>>()?;

    let mut coefficients = cfg.beta.clone();
    coefficients.residual_variance = cfg.sigma_eps * cfg.sigma_eps;
    let truth = Truth {
        x,
        eps,
        coefficients,
    };
    let y = (0..n)
        .map(|i| truth.response(i, z.iter().map(|c| c[i])))
        .collect();

    Ok(SyntheticDataset {
        data: Dataset::new(y, w, a, z)?,
        truth,
    })
}
