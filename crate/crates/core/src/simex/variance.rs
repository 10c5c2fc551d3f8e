use crate::error::{Error, Result};
use crate::model::Dataset;

/// Per-subject measurement-error variances of the densities `w_i / a_i`
/// from a single replicate: `V̄ / a_i`, where `V̄` is the mean density.
///
/// All-zero counts give all-zero variances.
pub fn estimate_error_variances(dataset: &Dataset) -> Vec<f64> {
    let v = dataset.densities();
    let v_bar = v.iter().sum::<f64>() / v.len() as f64;
    dataset.a().iter().map(|&a| v_bar / a).collect()
}

/// Density-scale error variance: either supplied or estimated from the data.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// One variance shared by every subject; requires constant areas.
    Known(f64),
    /// One variance per subject.
    KnownPerSubject(Vec<f64>),
    #[default]
    Estimated,
}

impl VarianceMode {
    /// Resolves the mode into per-subject variances for `dataset`.
    pub fn resolve(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        match self {
            VarianceMode::Estimated => Ok(estimate_error_variances(dataset)),
            VarianceMode::Known(s2) => {
                if !(*s2 >= 0.0) || !s2.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "known variance must be non-negative, got {s2}"
                    )));
                }
                if dataset.constant_area().is_none() {
                    return Err(Error::InvalidParameter(
                        "a single known variance needs constant areas; \
                         supply per-subject variances instead"
                            .into(),
                    ));
                }
                Ok(vec![*s2; dataset.len()])
            }
            VarianceMode::KnownPerSubject(v) => {
                if v.len() != dataset.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} known variances for {} subjects",
                        v.len(),
                        dataset.len()
                    )));
                }
                if v.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "known variances must be non-negative".into(),
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}
