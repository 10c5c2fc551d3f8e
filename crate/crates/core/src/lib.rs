//! SIMEX correction for linear regression when the error-prone covariate is
//! observed as a conditionally Poisson count over a known area.
//!
//! * [`model`] and [`ols`]: data containers and the least-squares fit.
//! * [`rng`], [`sampling`], [`synth`]: addressed random streams and the
//!   synthetic data generator.
//! * [`simex`]: variance estimation, pseudo-error profile, extrapolation.
//! * [`study`]: replicated Monte Carlo studies with CSV and SVG output.
//! * [`io`]: dataset and profile files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
mod linalg;
pub mod model;
pub mod ols;
pub mod rng;
pub mod sampling;
pub mod simex;
pub mod study;
pub mod synth;

pub use error::{Error, Result};
pub use model::{CoefficientVector, Dataset, PopulationMoments, SyntheticDataset, Truth};
pub use ols::{naive_fit, ols_fit};
pub use rng::RngStream;
pub use simex::{poi_simex, simex_profile, Extrapolant, SimexConfig, SimexEstimate, VarianceMode};
pub use synth::{generate_dataset, GenerationConfig};
