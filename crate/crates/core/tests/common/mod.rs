//! Exact rational-arithmetic least squares shared by the oracle tests.

use num::traits::{ToPrimitive, Zero};
use num::BigRational;

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

#[allow(clippy::needless_range_loop)]
/// Exact least squares on the design `[1, v, z...]` by Gaussian elimination
/// of the normal equations over the rationals. Returns the coefficients and
/// `RSS / (N - p - 2)`, both rounded once to f64.
pub fn exact_ols(v: &[f64], z: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len();
    let k = 2 + z.len();
    let row = |i: usize| -> Vec<BigRational> {
        let mut r = vec![BigRational::from_integer(1.into()), rat(v[i])];
        r.extend(z.iter().map(|col| rat(col[i])));
        r
    };
    let rows: Vec<Vec<BigRational>> = (0..n).map(row).collect();
    let ys: Vec<BigRational> = y.iter().map(|&t| rat(t)).collect();

    let mut m = vec![vec![BigRational::zero(); k + 1]; k];
    for (r, yi) in rows.iter().zip(&ys) {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += &r[i] * &r[j];
            }
            m[i][k] += &r[i] * yi;
        }
    }
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero()).expect("full rank");
        m.swap(col, pivot);
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for c in col..=k {
                    let t = &f * &m[col][c];
                    m[r][c] -= t;
                }
            }
        }
    }
    let beta: Vec<BigRational> = (0..k).map(|i| &m[i][k] / &m[i][i]).collect();
    let mut rss = BigRational::zero();
    for (r, yi) in rows.iter().zip(&ys) {
        let mut fit = BigRational::zero();
        for (x, b) in r.iter().zip(&beta) {
            fit += x * b;
        }
        let e = yi - fit;
        rss += &e * &e;
    }
    let dof = BigRational::from_integer(((n - k) as i64).into());
    (
        beta.iter().map(|b| b.to_f64().unwrap()).collect(),
        (rss / dof).to_f64().unwrap(),
    )
}
