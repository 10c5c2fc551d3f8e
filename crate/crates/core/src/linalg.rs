//! Small dense symmetric positive-definite solves for normal equations.

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest pivot mark the system singular.
pub const PIVOT_RATIO_THRESHOLD: f64 = 1e-12;

/// Solves `A x = b` for a symmetric positive-definite `A` (row-major, `n × n`).
///
/// The matrix is first equilibrated to unit diagonal, then factored by
/// Cholesky. The squared diagonal of the factor (the pivots) doubles as the
/// rank test: the system is rejected when the smallest pivot falls below
/// `PIVOT_RATIO_THRESHOLD` times the largest.
pub fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut scale = vec![0.0; n];
    for j in 0..n {
        let d = a[j * n + j];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::RankDeficient { pivot_ratio: 0.0 });
        }
        scale[j] = 1.0 / d.sqrt();
    }

    let mut l = vec![0.0; n * n];
    let mut pivots = vec![0.0; n];
    for j in 0..n {
        let mut d = a[j * n + j] * scale[j] * scale[j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        pivots[j] = d;
        if !(d > 0.0) {
            return Err(Error::RankDeficient { pivot_ratio: 0.0 });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j] * scale[i] * scale[j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }

    let max = pivots.iter().copied().fold(f64::MIN, f64::max);
    let min = pivots.iter().copied().fold(f64::MAX, f64::min);
    let ratio = min / max;
    if ratio < PIVOT_RATIO_THRESHOLD {
        return Err(Error::RankDeficient { pivot_ratio: ratio });
    }

    // forward then backward substitution on the scaled system
    let mut x: Vec<f64> = b.iter().zip(&scale).map(|(bi, si)| bi * si).collect();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for (xi, si) in x.iter_mut().zip(&scale) {
        *xi *= si;
    }
    Ok(x)
}

/// Least-squares solution of `X beta ≈ y` through the normal equations,
/// where `columns` holds the columns of `X`.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            xtx[i * k + j] = s;
            xtx[j * k + i] = s;
        }
        xty[i] = columns[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    solve_spd(&xtx, &xty, k)
}
