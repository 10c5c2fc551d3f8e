//! Gamma, Poisson, normal and uniform variates drawn from an [`RngStream`].

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Poisson means at or above this use transformed rejection (PTRS).
const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// `n` draws from Gamma(shape, scale).
///
/// Shape 1 is sampled by inversion as `-scale * ln(u)`; shape above 1 by the
/// Marsaglia–Tsang squeeze; shape below 1 by boosting a shape + 1 draw with
/// `u^(1/shape)`.
pub fn sample_gamma(stream: &mut RngStream, shape: f64, scale: f64, n: usize) -> Result<Vec<f64>> {
    if !(shape > 0.0) || !shape.is_finite() || !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma needs positive finite shape and scale, got shape={shape}, scale={scale}"
        )));
    }
    Ok((0..n).map(|_| gamma_one(stream, shape) * scale).collect())
}

fn gamma_one(stream: &mut RngStream, shape: f64) -> f64 {
    if shape == 1.0 {
        -stream.next_open01().ln()
    } else if shape < 1.0 {
        let boosted = marsaglia_tsang(stream, shape + 1.0);
        boosted * stream.next_open01().powf(1.0 / shape)
    } else {
        marsaglia_tsang(stream, shape)
    }
}

fn marsaglia_tsang(stream: &mut RngStream, shape: f64) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = stream.next_standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = stream.next_open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One Poisson(mean) draw.
pub fn sample_poisson(stream: &mut RngStream, mean: f64) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "poisson mean must be finite and non-negative, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    Ok(if mean < POISSON_INVERSION_LIMIT {
        poisson_inversion(stream, mean)
    } else {
        poisson_ptrs(stream, mean)
    })
}

fn poisson_inversion(stream: &mut RngStream, mean: f64) -> u64 {
    let u = stream.next_f64();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // cdf can stall just below 1 from rounding
        if p == 0.0 && k as f64 > mean {
            break;
        }
    }
    k
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables".
fn poisson_ptrs(stream: &mut RngStream, mean: f64) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = stream.next_f64() - 0.5;
        let v = stream.next_open01();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `ln(k!)`: exact summation for small `k`, Stirling series beyond.
pub(crate) fn ln_factorial(k: u64) -> f64 {
    if k < 16 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let x2 = x * x;
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
}

/// `n` draws from N(mu, sd²); `sd = 0` yields the constant `mu`.
pub fn sample_normal(stream: &mut RngStream, mu: f64, sd: f64, n: usize) -> Result<Vec<f64>> {
    if !(sd >= 0.0) || !sd.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "normal needs finite mu and non-negative sd, got mu={mu}, sd={sd}"
        )));
    }
    if sd == 0.0 {
        return Ok(vec![mu; n]);
    }
    Ok((0..n)
        .map(|_| mu + sd * stream.next_standard_normal())
        .collect())
}

/// `n` draws from Uniform[lo, hi).
pub fn sample_uniform(stream: &mut RngStream, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "uniform needs finite lo < hi, got lo={lo}, hi={hi}"
        )));
    }
    let width = hi - lo;
    Ok((0..n)
        .map(|_| {
            let v = lo + width * stream.next_f64();
            // rounding in lo + width*u can land on hi
            if v < hi {
                v
            } else {
                lo
            }
        })
        .collect())
}
