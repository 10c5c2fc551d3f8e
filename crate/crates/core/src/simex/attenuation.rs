use crate::error::{Error, Result};
use crate::model::PopulationMoments;

/// Large-sample limit of the naive slope when the surrogate carries
/// `(1 + lambda)` times the Poisson measurement-error variance:
/// `beta1 * Var[X] / (Var[X] + (1 + lambda) E[X])` (unit areas).
///
/// At `lambda = -1` this is `beta1` itself, which is what SIMEX
/// extrapolates towards.
pub fn attenuation_curve(moments: &PopulationMoments, beta1: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= -1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be at least -1, got {lambda}"
        )));
    }
    let denom = moments.var_x() + (1.0 + lambda) * moments.mean_x();
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Var[X] + (1 + lambda) E[X] must be positive, got {denom}"
        )));
    }
    Ok(beta1 * (moments.var_x() / denom))
}
