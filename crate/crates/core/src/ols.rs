//! Ordinary least squares on the design `[1, surrogate, z]`.

use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::model::{CoefficientVector, Dataset};

/// Least-squares fit of `y` on an intercept, the surrogate and the columns
/// of `z`.
///
/// The intercept is profiled out by centering, leaving a `(p + 1)`-square
/// system of centered cross products that is solved by Cholesky. The
/// residual variance uses the `N - p - 2` denominator.
pub fn ols_fit(surrogate: &[f64], z: &[Vec<f64>], y: &[f64]) -> Result<CoefficientVector> {
    let n = y.len();
    let p = z.len();
    if surrogate.len() != n || z.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "response has {n} rows but the design has columns of length {}",
            std::iter::once(surrogate.len())
                .chain(z.iter().map(Vec::len))
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join("/")
        )));
    }
    let params = p + 2;
    if n <= params {
        return Err(Error::InsufficientObservations { n, params });
    }

    let k = p + 1;
    let mut columns: Vec<&[f64]> = Vec::with_capacity(k);
    columns.push(surrogate);
    columns.extend(z.iter().map(Vec::as_slice));

    let nf = n as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;

    let mut sxx = vec![0.0; k * k];
    let mut sxy = vec![0.0; k];
    let mut centered = vec![0.0; k];
    for i in 0..n {
        for (j, c) in columns.iter().enumerate() {
            centered[j] = c[i] - means[j];
        }
        let yc = y[i] - y_mean;
        for a in 0..k {
            let ca = centered[a];
            sxy[a] += ca * yc;
            for b in 0..=a {
                sxx[a * k + b] += ca * centered[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            sxx[b * k + a] = sxx[a * k + b];
        }
    }

    let slopes = solve_spd(&sxx, &sxy, k)?;
    let intercept = y_mean - slopes.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();

    let mut rss = 0.0;
    for i in 0..n {
        let mut r = y[i] - y_mean;
        for (j, c) in columns.iter().enumerate() {
            r -= slopes[j] * (c[i] - means[j]);
        }
        rss += r * r;
    }

    Ok(CoefficientVector {
        intercept,
        beta_x: slopes[0],
        beta_z: slopes[1..].to_vec(),
        residual_variance: rss / (n - params) as f64,
    })
}

/// The uncorrected fit using observed densities `w / a` as the covariate.
pub fn naive_fit(dataset: &Dataset) -> Result<CoefficientVector> {
    ols_fit(&dataset.densities(), dataset.z(), dataset.y())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let c = ols_fit(&[1.0, 2.0, 3.0], &[], &[3.0, 5.0, 7.0]).unwrap();
        assert!((c.intercept - 1.0).abs() < 1e-14);
        assert!((c.beta_x - 2.0).abs() < 1e-14);
        assert!(c.residual_variance < 1e-28);
        assert!(c.beta_z.is_empty());
    }

    #[test]
    fn constant_regressor_is_rank_deficient() {
        let err = ols_fit(&[1.0, 1.0, 1.0], &[], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn collinear_z_is_rank_deficient() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        let z = vec![v.iter().map(|x| 2.0 * x + 1.0).collect()];
        let err = ols_fit(&v, &z, &[1.0, 0.0, 2.0, 5.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn mismatched_lengths() {
        let err = ols_fit(&[1.0, 2.0], &[], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err = ols_fit(&[1.0, 2.0, 3.0], &[vec![1.0]], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn too_few_observations() {
        let err = ols_fit(&[1.0, 2.0], &[], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientObservations { n: 2, params: 2 }));
    }

    #[test]
    fn naive_uses_densities() {
        let unit = Dataset::new(vec![2.0, 4.0, 6.0], vec![2, 4, 6], vec![1.0; 3], vec![]).unwrap();
        let c = naive_fit(&unit).unwrap();
        assert!(c.intercept.abs() < 1e-14);
        assert!((c.beta_x - 1.0).abs() < 1e-14);

        let halved = Dataset::new(vec![2.0, 4.0, 6.0], vec![2, 4, 6], vec![2.0; 3], vec![]).unwrap();
        let h = naive_fit(&halved).unwrap();
        assert!((h.beta_x - 2.0).abs() < 1e-14);
        assert!((h.intercept - c.intercept).abs() < 1e-14);
    }
}
