//! Observed data, generation-time truth, and coefficient containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed study data: response `y`, surrogate counts `w` over areas `a`,
/// and error-free covariates `z` (stored column-wise).
///
/// Hidden generation values are kept in [`Truth`], which estimators never
/// receive.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    w: Vec<u64>,
    a: Vec<f64>,
    z: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, w: Vec<u64>, a: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "a dataset needs at least 2 subjects, got {n}"
            )));
        }
        if w.len() != n || a.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "y has {n} rows, w has {}, a has {}",
                w.len(),
                a.len()
            )));
        }
        if let Some((j, col)) = z.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "z column {} has {} rows, expected {n}",
                j + 1,
                col.len()
            )));
        }
        if let Some(i) = a.iter().position(|&ai| !(ai > 0.0) || !ai.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "area of subject {i} must be positive and finite, got {}",
                a[i]
            )));
        }
        if y.iter().chain(z.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "responses and covariates must be finite".into(),
            ));
        }
        Ok(Dataset { y, w, a, z })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[u64] {
        &self.w
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Error-free covariates, one vector per column.
    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    /// Number of error-free covariate columns.
    pub fn p(&self) -> usize {
        self.z.len()
    }

    /// Observed densities `w_i / a_i`, the regression surrogate.
    pub fn densities(&self) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.a)
            .map(|(&w, &a)| w as f64 / a)
            .collect()
    }

    /// Raw counts as reals.
    pub fn counts(&self) -> Vec<f64> {
        self.w.iter().map(|&w| w as f64).collect()
    }

    /// The shared area when every subject has the same one.
    pub fn constant_area(&self) -> Option<f64> {
        let first = self.a[0];
        self.a.iter().all(|&a| a == first).then_some(first)
    }

    /// Copy with the response replaced; other columns are kept.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Dataset::new(y, self.w.clone(), self.a.clone(), self.z.clone())
    }

    /// Copy with subjects reordered by `order` (a permutation of `0..n`).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation has {} entries for {} subjects",
                order.len(),
                self.len()
            )));
        }
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset::new(
            pick(&self.y),
            order.iter().map(|&i| self.w[i]).collect(),
            pick(&self.a),
            self.z.iter().map(|c| pick(c)).collect(),
        )
    }
}

/// Unobserved generation values for a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    /// Coefficients the responses were generated from.
    pub coefficients: CoefficientVector,
}

impl Truth {
    /// Response implied by the generation model for subject `i`.
    pub fn response(&self, i: usize, z_row: impl IntoIterator<Item = f64>) -> f64 {
        let c = &self.coefficients;
        let mut y = c.intercept + c.beta_x * self.x[i];
        for (bz, zi) in c.beta_z.iter().zip(z_row) {
            y += bz * zi;
        }
        y + self.eps[i]
    }

    /// True when every stored response is reproduced bit-for-bit by the
    /// generation model and every true density is positive.
    pub fn reconstructs(&self, data: &Dataset) -> bool {
        if self.x.len() != data.len() || self.eps.len() != data.len() {
            return false;
        }
        if self.x.iter().any(|&x| !(x > 0.0)) {
            return false;
        }
        (0..data.len()).all(|i| {
            let row = data.z().iter().map(|c| c[i]);
            self.response(i, row) == data.y()[i]
        })
    }
}

/// A dataset together with the values it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub data: Dataset,
    pub truth: Truth,
}

/// Regression coefficients `(intercept, beta_x, beta_z)` plus the
/// residual variance of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientVector {
    pub intercept: f64,
    pub beta_x: f64,
    #[serde(default)]
    pub beta_z: Vec<f64>,
    #[serde(default)]
    pub residual_variance: f64,
}

impl CoefficientVector {
    /// Number of regression coefficients (intercept, beta_x, each beta_z).
    pub fn len(&self) -> usize {
        2 + self.beta_z.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient by position: 0 = intercept, 1 = beta_x, 2.. = beta_z.
    pub fn get(&self, index: usize) -> Option<f64> {
        match index {
            0 => Some(self.intercept),
            1 => Some(self.beta_x),
            j => self.beta_z.get(j - 2).copied(),
        }
    }

    /// Inverse of [`CoefficientVector::get`] over all positions.
    pub fn from_components(components: &[f64], residual_variance: f64) -> Self {
        CoefficientVector {
            intercept: components[0],
            beta_x: components[1],
            beta_z: components[2..].to_vec(),
            residual_variance,
        }
    }

    pub fn components(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.intercept);
        v.push(self.beta_x);
        v.extend_from_slice(&self.beta_z);
        v
    }

    /// Coordinate-wise arithmetic mean, summed in slice order.
    pub fn mean(fits: &[CoefficientVector]) -> Result<Self> {
        let first = fits.first().ok_or(Error::EmptyInput)?;
        let k = first.len();
        let mut acc = vec![0.0; k];
        let mut rv = 0.0;
        for f in fits {
            if f.len() != k {
                return Err(Error::DimensionMismatch(
                    "coefficient vectors of different lengths".into(),
                ));
            }
            for (j, a) in acc.iter_mut().enumerate() {
                *a += f.get(j).unwrap_or_default();
            }
            rv += f.residual_variance;
        }
        let m = fits.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        Ok(CoefficientVector::from_components(&acc, rv / m))
    }
}

/// First two moments of the true covariate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationMoments {
    mean_x: f64,
    var_x: f64,
}

impl PopulationMoments {
    pub fn new(mean_x: f64, var_x: f64) -> Result<Self> {
        if !(mean_x > 0.0) || !mean_x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "E[X] must be positive, got {mean_x}"
            )));
        }
        if !(var_x >= 0.0) || !var_x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Var[X] must be non-negative, got {var_x}"
            )));
        }
        Ok(PopulationMoments { mean_x, var_x })
    }

    /// Moments of a Gamma(shape, scale) density.
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        PopulationMoments::new(shape * scale, shape * scale * scale)
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn var_x(&self) -> f64 {
        self.var_x
    }
}
