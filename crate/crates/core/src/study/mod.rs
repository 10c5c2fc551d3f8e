//! Replicated Monte Carlo studies: generate datasets per sample size, run
//! each estimator, and summarize the beta_x estimates.

mod report;
mod summary;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{boxplot_svg, cells_csv, emit_boxplot_svg, emit_study_csv, summary_csv};
pub use summary::{quantile_sorted, summarize, BoxplotSummary};

use crate::error::{Error, Result};
use crate::model::{CoefficientVector, Dataset};
use crate::ols::naive_fit;
use crate::rng::RngStream;
use crate::simex::{poi_simex, SimexConfig, VarianceMode};
use crate::synth::{generate_dataset, GenerationConfig};

/// Share of failed cells above which a study is flagged as degraded.
pub const DEGRADED_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// SIMEX with the true error variance `E[X] / a_i`.
    PoiSimexKnown,
    /// SIMEX with the variance estimated from the data.
    PoiSimexEstimated,
    Naive,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [
        Estimator::PoiSimexKnown,
        Estimator::PoiSimexEstimated,
        Estimator::Naive,
    ];

    /// Fixed stream index, independent of which estimators a study lists.
    pub fn stream_index(self) -> u64 {
        match self {
            Estimator::PoiSimexKnown => 0,
            Estimator::PoiSimexEstimated => 1,
            Estimator::Naive => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Estimator::PoiSimexKnown => "poi_simex_known",
            Estimator::PoiSimexEstimated => "poi_simex_estimated",
            Estimator::Naive => "naive",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Template; `n` is replaced by each sample size.
    pub generation: GenerationConfig,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub simex: SimexConfig,
    pub estimators: Vec<Estimator>,
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl StudyConfig {
    /// The consistency experiment: the reference design at nine sample sizes
    /// from 100 to 5000, 200 replicates each.
    pub fn reference(base_seed: u64) -> Self {
        StudyConfig {
            generation: GenerationConfig::reference(0),
            sample_sizes: vec![100, 200, 400, 800, 1000, 1500, 2000, 3000, 5000],
            replicates: 200,
            simex: SimexConfig {
                extrapolant: crate::simex::Extrapolant::Rational,
                ..SimexConfig::default()
            },
            estimators: vec![
                Estimator::PoiSimexKnown,
                Estimator::PoiSimexEstimated,
                Estimator::Naive,
            ],
            base_seed,
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidParameter("sample_sizes is empty".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "sample_sizes must be strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(Error::InvalidParameter("estimators are listed twice".into()));
        }
        for &n in &self.sample_sizes {
            self.generation_for(n).validate()?;
        }
        if self.estimators.iter().any(|e| *e != Estimator::Naive) {
            self.simex.validate()?;
        }
        Ok(())
    }

    pub fn generation_for(&self, n: usize) -> GenerationConfig {
        GenerationConfig {
            n,
            ..self.generation.clone()
        }
    }

    /// Stream for the dataset of sample-size index `s`, replicate `r`.
    pub fn dataset_stream(&self, s: usize, r: usize) -> RngStream {
        RngStream::new(self.base_seed, &[s as u64, r as u64])
    }

    /// Pseudo-error stream for one estimator in one cell.
    pub fn estimator_stream(&self, s: usize, r: usize, estimator: Estimator) -> RngStream {
        RngStream::new(
            self.base_seed,
            &[s as u64, r as u64, estimator.stream_index()],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellEstimate {
    pub coefficients: CoefficientVector,
    pub converged: bool,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Ok(CellEstimate),
    Failed { tag: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub rep: usize,
    pub estimator: Estimator,
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn beta_x(&self) -> Option<f64> {
        match &self.outcome {
            CellOutcome::Ok(e) => Some(e.coefficients.beta_x),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn status(&self) -> &str {
        match &self.outcome {
            CellOutcome::Ok(_) => "ok",
            CellOutcome::Failed { tag, .. } => tag,
        }
    }
}

/// Summary of one (sample size, estimator) group over its successful cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub n: usize,
    pub estimator: Estimator,
    /// `None` when every cell in the group failed.
    pub summary: Option<BoxplotSummary>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub sample_sizes: Vec<usize>,
    pub estimators: Vec<Estimator>,
    /// Number of error-free covariates in every dataset.
    pub p: usize,
    pub true_beta_x: f64,
    /// Sorted by sample size, replicate, estimator name.
    pub cells: Vec<Cell>,
    /// Sorted by sample size, estimator name.
    pub summaries: Vec<GroupSummary>,
    /// Set when more than 5% of cells failed.
    pub degraded: Option<String>,
}

impl StudyResult {
    pub fn summary(&self, n: usize, estimator: Estimator) -> Option<&BoxplotSummary> {
        self.summaries
            .iter()
            .find(|g| g.n == n && g.estimator == estimator)
            .and_then(|g| g.summary.as_ref())
    }

    pub fn cell(&self, n: usize, rep: usize, estimator: Estimator) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.rep == rep && c.estimator == estimator)
    }

    pub fn beta_x_values(&self, n: usize, estimator: Estimator) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.n == n && c.estimator == estimator)
            .filter_map(Cell::beta_x)
            .collect()
    }
}

fn estimate(
    cfg: &StudyConfig,
    gen: &GenerationConfig,
    data: &Dataset,
    estimator: Estimator,
    stream: &RngStream,
) -> Result<CellEstimate> {
    match estimator {
        Estimator::Naive => Ok(CellEstimate {
            coefficients: naive_fit(data)?,
            converged: true,
            fallback_used: false,
        }),
        Estimator::PoiSimexKnown | Estimator::PoiSimexEstimated => {
            let variance_mode = if estimator == Estimator::PoiSimexKnown {
                VarianceMode::KnownPerSubject(gen.true_error_variances())
            } else {
                VarianceMode::Estimated
            };
            let simex = SimexConfig {
                variance_mode,
                keep_raw: false,
                ..cfg.simex.clone()
            };
            let est = poi_simex(data, &simex, stream)?;
            Ok(CellEstimate {
                converged: est.converged(),
                fallback_used: est.fallback_used(),
                coefficients: est.coefficients,
            })
        }
    }
}

fn outcome(result: Result<CellEstimate>) -> CellOutcome {
    match result {
        Ok(e) => CellOutcome::Ok(e),
        Err(e) => CellOutcome::Failed {
            tag: e.tag().to_string(),
            message: e.to_string(),
        },
    }
}

fn run_unit(cfg: &StudyConfig, s: usize, r: usize) -> Vec<Cell> {
    let n = cfg.sample_sizes[s];
    let gen = cfg.generation_for(n);
    let data = generate_dataset(&gen, &cfg.dataset_stream(s, r));
    cfg.estimators
        .iter()
        .map(|&estimator| {
            let result = match &data {
                Ok(d) => estimate(cfg, &gen, &d.data, estimator, &cfg.estimator_stream(s, r, estimator)),
                Err(e) => Err(Error::InvalidParameter(e.to_string())),
            };
            Cell {
                n,
                rep: r,
                estimator,
                outcome: outcome(result),
            }
        })
        .collect()
}

/// Recomputes one cell from scratch.
pub fn compute_cell(cfg: &StudyConfig, s: usize, r: usize, estimator: Estimator) -> Result<Cell> {
    cfg.validate()?;
    let n = *cfg
        .sample_sizes
        .get(s)
        .ok_or_else(|| Error::InvalidParameter(format!("sample-size index {s} out of range")))?;
    let gen = cfg.generation_for(n);
    let data = generate_dataset(&gen, &cfg.dataset_stream(s, r))?;
    let result = estimate(cfg, &gen, &data.data, estimator, &cfg.estimator_stream(s, r, estimator));
    Ok(Cell {
        n,
        rep: r,
        estimator,
        outcome: outcome(result),
    })
}

/// Runs every (sample size, replicate) unit on the current rayon pool.
/// Values depend only on the configuration, never on scheduling.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = (0..cfg.sample_sizes.len())
        .flat_map(|s| (0..cfg.replicates).map(move |r| (s, r)))
        .collect();
    let mut cells: Vec<Cell> = units
        .par_iter()
        .flat_map_iter(|&(s, r)| run_unit(cfg, s, r))
        .collect();
    cells.sort_by(|a, b| {
        (a.n, a.rep, a.estimator.name()).cmp(&(b.n, b.rep, b.estimator.name()))
    });

    let mut order = cfg.estimators.clone();
    order.sort_by_key(|e| e.name());
    let mut summaries = Vec::new();
    for &n in &cfg.sample_sizes {
        for &estimator in &order {
            let group: Vec<&Cell> = cells
                .iter()
                .filter(|c| c.n == n && c.estimator == estimator)
                .collect();
            let values: Vec<f64> = group.iter().filter_map(|c| c.beta_x()).collect();
            summaries.push(GroupSummary {
                n,
                estimator,
                summary: summarize(&values).ok(),
                failed: group.len() - values.len(),
            });
        }
    }

    let failed: usize = summaries.iter().map(|g| g.failed).sum();
    let degraded = (!cells.is_empty()
        && failed as f64 > DEGRADED_FAILURE_SHARE * cells.len() as f64)
        .then(|| format!("{failed} of {} cells failed", cells.len()));

    Ok(StudyResult {
        sample_sizes: cfg.sample_sizes.clone(),
        estimators: order,
        p: cfg.generation.beta.beta_z.len(),
        true_beta_x: cfg.generation.beta.beta_x,
        cells,
        summaries,
        degraded,
    })
}

/// [`run_study`] on a dedicated pool of `threads` workers.
pub fn run_study_with_threads(cfg: &StudyConfig, threads: usize) -> Result<StudyResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_study(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(estimators: Vec<Estimator>) -> StudyConfig {
        StudyConfig {
            sample_sizes: vec![100],
            replicates: 1,
            estimators,
            simex: SimexConfig {
                b_reps: 5,
                ..SimexConfig::default()
            },
            ..StudyConfig::reference(11)
        }
    }

    #[test]
    fn single_naive_cell_is_naive_fit() {
        let cfg = tiny(vec![Estimator::Naive]);
        let res = run_study(&cfg).unwrap();
        assert_eq!(res.cells.len(), 1);
        let data = generate_dataset(&cfg.generation_for(100), &cfg.dataset_stream(0, 0)).unwrap();
        let expected = naive_fit(&data.data).unwrap();
        match &res.cells[0].outcome {
            CellOutcome::Ok(e) => assert_eq!(e.coefficients, expected),
            other => panic!("{other:?}"),
        }
        assert!(res.degraded.is_none());
    }

    #[test]
    fn validation() {
        let mut cfg = tiny(vec![Estimator::Naive]);
        cfg.sample_sizes = vec![200, 100];
        assert!(cfg.validate().is_err());
        cfg.sample_sizes = vec![];
        assert!(cfg.validate().is_err());
        cfg.sample_sizes = vec![100];
        cfg.replicates = 0;
        assert!(cfg.validate().is_err());
        cfg.replicates = 1;
        cfg.estimators = vec![Estimator::Naive, Estimator::Naive];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // n = 3 leaves no residual degrees of freedom for three parameters
        let mut cfg = tiny(vec![Estimator::Naive, Estimator::PoiSimexEstimated]);
        cfg.sample_sizes = vec![3, 100];
        cfg.replicates = 2;
        let res = run_study(&cfg).unwrap();
        assert_eq!(res.cells.len(), 8);
        let failed = res.cells.iter().filter(|c| c.beta_x().is_none()).count();
        assert_eq!(failed, 4);
        assert!(res.cells.iter().filter(|c| c.n == 3).all(|c| c.status() == "insufficient_observations"));
        assert!(res.degraded.is_some());
        assert!(res.summary(3, Estimator::Naive).is_none());
        assert!(res.summary(100, Estimator::Naive).is_some());
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!(matches!("corrected_score".parse::<Estimator>(), Err(Error::UnknownEstimator(_))));
    }

    #[test]
    fn config_json_is_strict() {
        let json = serde_json::to_string(&tiny(vec![Estimator::Naive])).unwrap();
        let back: StudyConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tiny(vec![Estimator::Naive]));
        let extra = json.replacen('{', "{\"typo\":1,", 1);
        assert!(serde_json::from_str::<StudyConfig>(&extra).is_err());
    }
}
