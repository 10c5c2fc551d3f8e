//! Extrapolation step: fit a curve to the lambda profile of one coefficient
//! and evaluate it at lambda = -1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, solve_spd};
use crate::simex::profile::SimexProfile;

/// Where the extrapolated value is read off: no measurement error at all.
pub const TARGET_LAMBDA: f64 = -1.0;

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;
const RELATIVE_RSS_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-10;
const POLE_TOL: f64 = 1e-12;
/// Largest accepted `|g(-1) - g(min λ)|` as a multiple of the profile range.
const RUNAWAY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolant {
    /// `a + b λ`
    Linear,
    /// `a + b λ + c λ²`
    Quadratic,
    /// `a + b / (c + λ)`
    Rational,
}

impl Extrapolant {
    pub fn param_count(self) -> usize {
        match self {
            Extrapolant::Linear => 2,
            Extrapolant::Quadratic | Extrapolant::Rational => 3,
        }
    }

    /// Fewest grid points the fit accepts.
    pub fn min_grid(self) -> usize {
        match self {
            Extrapolant::Rational => self.param_count() + 1,
            _ => self.param_count(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Extrapolant::Linear => "linear",
            Extrapolant::Quadratic => "quadratic",
            Extrapolant::Rational => "rational",
        }
    }
}

impl fmt::Display for Extrapolant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extrapolant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Extrapolant::Linear),
            "quadratic" => Ok(Extrapolant::Quadratic),
            "rational" => Ok(Extrapolant::Rational),
            other => Err(Error::InvalidParameter(format!(
                "unknown extrapolant `{other}` (expected linear, quadratic or rational)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolantFit {
    pub kind: Extrapolant,
    pub params: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    /// A rational fit was requested but a quadratic one is reported.
    pub fallback_used: bool,
}

impl ExtrapolantFit {
    pub fn evaluate(&self, lambda: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            Extrapolant::Linear => p[0] + p[1] * lambda,
            Extrapolant::Quadratic => p[0] + p[1] * lambda + p[2] * (lambda * lambda),
            Extrapolant::Rational => p[0] + p[1] / (p[2] + lambda),
        }
    }
}

/// Value of the fitted curve at lambda = -1.
pub fn extrapolate(fit: &ExtrapolantFit) -> Result<f64> {
    if fit.params.len() != fit.kind.param_count() {
        return Err(Error::InvalidParameter(format!(
            "{} extrapolant needs {} parameters, got {}",
            fit.kind,
            fit.kind.param_count(),
            fit.params.len()
        )));
    }
    if fit.kind == Extrapolant::Rational && (fit.params[2] + TARGET_LAMBDA).abs() <= POLE_TOL {
        return Err(Error::PoleAtTarget { c: fit.params[2] });
    }
    Ok(fit.evaluate(TARGET_LAMBDA))
}

/// Fits `kind` to the profile of coefficient `coefficient_index`
/// (0 = intercept, 1 = beta_x, 2.. = beta_z).
pub fn fit_extrapolant(
    profile: &SimexProfile,
    kind: Extrapolant,
    coefficient_index: usize,
) -> Result<ExtrapolantFit> {
    let values = profile.series(coefficient_index).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "coefficient index {coefficient_index} is out of range"
        ))
    })?;
    fit_curve(&profile.lambdas, &values, kind)
}

/// Fits `kind` to the points `(lambdas[k], values[k])`.
///
/// Linear and quadratic curves are exact least squares. The rational curve
/// is fitted by damped Gauss–Newton; when that fails to converge, leaves a
/// pole inside `[-1, max λ]`, or moves more than ten profile ranges between
/// the grid and -1, a quadratic fit is returned instead with `fallback_used`
/// set.
pub fn fit_curve(lambdas: &[f64], values: &[f64], kind: Extrapolant) -> Result<ExtrapolantFit> {
    if lambdas.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} lambdas but {} values",
            lambdas.len(),
            values.len()
        )));
    }
    if lambdas.len() < kind.min_grid() {
        return Err(Error::InsufficientGrid {
            kind: kind.name(),
            got: lambdas.len(),
            need: kind.min_grid(),
        });
    }
    if values.iter().chain(lambdas).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("profile values must be finite".into()));
    }

    // A flat profile means the pseudo-errors never moved the estimate.
    if values.iter().all(|&v| v == values[0]) {
        let max_lambda = lambdas.iter().copied().fold(0.0, f64::max);
        let params = match kind {
            Extrapolant::Linear => vec![values[0], 0.0],
            Extrapolant::Quadratic => vec![values[0], 0.0, 0.0],
            Extrapolant::Rational => vec![values[0], 0.0, 2.0 + max_lambda],
        };
        return Ok(ExtrapolantFit {
            kind,
            params,
            rss: 0.0,
            converged: true,
            fallback_used: false,
        });
    }

    match kind {
        Extrapolant::Linear | Extrapolant::Quadratic => polynomial_fit(lambdas, values, kind),
        Extrapolant::Rational => {
            let (fit, converged) = rational_fit(lambdas, values)?;
            let max_lambda = lambdas.iter().copied().fold(f64::MIN, f64::max);
            match fit {
                Some(params)
                    if converged
                        && pole_free(params[2], max_lambda)
                        && !runaway(lambdas, values, &params) =>
                {
                    let rss = rss_rational(lambdas, values, &params);
                    Ok(ExtrapolantFit {
                        kind,
                        params,
                        rss,
                        converged,
                        fallback_used: false,
                    })
                }
                _ => {
                    let mut q = polynomial_fit(lambdas, values, Extrapolant::Quadratic)?;
                    q.converged = converged;
                    q.fallback_used = true;
                    Ok(q)
                }
            }
        }
    }
}

fn polynomial_fit(lambdas: &[f64], values: &[f64], kind: Extrapolant) -> Result<ExtrapolantFit> {
    let degree = kind.param_count() - 1;
    let columns: Vec<Vec<f64>> = (0..=degree)
        .map(|d| lambdas.iter().map(|&l| l.powi(d as i32)).collect())
        .collect();
    let params = least_squares(&columns, values)?;
    let mut fit = ExtrapolantFit {
        kind,
        params,
        rss: 0.0,
        converged: true,
        fallback_used: false,
    };
    fit.rss = lambdas
        .iter()
        .zip(values)
        .map(|(&l, &v)| (fit.evaluate(l) - v).powi(2))
        .sum();
    Ok(fit)
}

/// `c + λ` stays away from zero on the whole of `[-1, max λ]`.
fn pole_free(c: f64, max_lambda: f64) -> bool {
    c.is_finite() && (c > 1.0 + POLE_TOL || c < -max_lambda - POLE_TOL)
}

/// The extrapolated step from the grid to lambda = -1 dwarfs the spread of
/// the profile itself, as when a noisy, nearly flat profile pulls the pole
/// just past -1.
fn runaway(lambdas: &[f64], values: &[f64], p: &[f64]) -> bool {
    let lo = values.iter().copied().fold(f64::MAX, f64::min);
    let hi = values.iter().copied().fold(f64::MIN, f64::max);
    let min_lambda = lambdas.iter().copied().fold(f64::MAX, f64::min);
    let g = |l: f64| p[0] + p[1] / (p[2] + l);
    let step = (g(TARGET_LAMBDA) - g(min_lambda)).abs();
    !(step <= RUNAWAY_FACTOR * (hi - lo))
}

fn rss_rational(lambdas: &[f64], values: &[f64], p: &[f64]) -> f64 {
    lambdas
        .iter()
        .zip(values)
        .map(|(&l, &v)| {
            let r = p[0] + p[1] / (p[2] + l) - v;
            r * r
        })
        .sum()
}

/// With `c` fixed the curve is linear in `(a, b)`; returns the best pair and
/// its residual sum of squares.
fn rational_given_c(lambdas: &[f64], values: &[f64], c: f64) -> Option<([f64; 3], f64)> {
    let columns = vec![vec![1.0; lambdas.len()], lambdas.iter().map(|l| 1.0 / (c + l)).collect()];
    let ab = least_squares(&columns, values).ok()?;
    let p = [ab[0], ab[1], c];
    let rss = rss_rational(lambdas, values, &p);
    rss.is_finite().then_some((p, rss))
}

/// Starting points: the quadratic-tail heuristic plus a scan over the pole
/// location with `(a, b)` profiled out at each candidate `c`.
fn rational_start(lambdas: &[f64], values: &[f64]) -> Result<[f64; 3]> {
    let min_lambda = lambdas.iter().copied().fold(f64::MAX, f64::min);
    let max_lambda = lambdas.iter().copied().fold(f64::MIN, f64::max);
    let span = (max_lambda - min_lambda).max(1e-3);
    let mut best: Option<([f64; 3], f64)> = None;
    let mut consider = |cand: Option<([f64; 3], f64)>| {
        if let Some((p, rss)) = cand {
            if best.as_ref().is_none_or(|(_, r)| rss < *r) {
                best = Some((p, rss));
            }
        }
    };

    let quad = polynomial_fit(lambdas, values, Extrapolant::Quadratic)?;
    let a0 = quad.evaluate(max_lambda + 5.0);
    let c0 = 1.0 + 2.0 * span;
    let first = lambdas
        .iter()
        .position(|&l| l == min_lambda)
        .expect("non-empty grid");
    let b0 = (values[first] - a0) * (c0 + min_lambda);
    let p0 = [a0, b0, c0];
    let rss0 = rss_rational(lambdas, values, &p0);
    if rss0.is_finite() {
        consider(Some((p0, rss0)));
    }

    for i in 0..=48 {
        let offset = span * 10f64.powf(-3.0 + 7.0 * i as f64 / 48.0);
        consider(rational_given_c(lambdas, values, 1.0 + offset));
        consider(rational_given_c(lambdas, values, -max_lambda - offset));
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| Error::InvalidParameter("no finite rational starting point".into()))
}

/// Damped Gauss–Newton. Returns the final parameters (if any) and whether
/// the iteration met its convergence test.
fn rational_fit(lambdas: &[f64], values: &[f64]) -> Result<(Option<Vec<f64>>, bool)> {
    let max_lambda = lambdas.iter().copied().fold(f64::MIN, f64::max);
    let scale: f64 = values.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut p = rational_start(lambdas, values)?;
    let upper = p[2] > 1.0;
    let in_region = |c: f64| if upper { c > 1.0 + POLE_TOL } else { c < -max_lambda - POLE_TOL };
    let mut rss = rss_rational(lambdas, values, &p);

    for _ in 0..MAX_ITERATIONS {
        if rss <= 1e-30 * scale {
            return Ok((Some(p.to_vec()), true));
        }
        let mut jtj = [0.0; 9];
        let mut jtr = [0.0; 3];
        for (&l, &v) in lambdas.iter().zip(values) {
            let d = 1.0 / (p[2] + l);
            let row = [1.0, d, -p[1] * d * d];
            let r = p[0] + p[1] * d - v;
            for i in 0..3 {
                jtr[i] -= row[i] * r;
                for j in 0..3 {
                    jtj[i * 3 + j] += row[i] * row[j];
                }
            }
        }
        let step = match solve_spd(&jtj, &jtr, 3) {
            Ok(s) => s,
            Err(_) => return Ok((Some(p.to_vec()), false)),
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = [p[0] + t * step[0], p[1] + t * step[1], p[2] + t * step[2]];
            if in_region(cand[2]) {
                let cand_rss = rss_rational(lambdas, values, &cand);
                if cand_rss <= rss {
                    accepted = Some((cand, cand_rss));
                    break;
                }
            }
            t *= 0.5;
        }

        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let Some((next, next_rss)) = accepted else {
            // no descent along the Gauss–Newton direction: stationary up to rounding
            let small = norm(&step) <= 1e-6 * (1.0 + norm(&p));
            return Ok((Some(p.to_vec()), small));
        };
        let moved: Vec<f64> = step.iter().map(|s| s * t).collect();
        let rel_change = (rss - next_rss) / rss.max(f64::MIN_POSITIVE);
        p = next;
        rss = next_rss;
        if rel_change < RELATIVE_RSS_TOL || norm(&moved) < STEP_TOL * (1.0 + norm(&p)) {
            return Ok((Some(p.to_vec()), true));
        }
    }
    Ok((Some(p.to_vec()), false))
}
