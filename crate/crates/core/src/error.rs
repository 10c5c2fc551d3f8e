use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The normal-equations system is numerically singular.
    #[error("design matrix is rank deficient (smallest/largest pivot = {pivot_ratio:.3e})")]
    RankDeficient { pivot_ratio: f64 },

    #[error("need more than {params} observations for {params} regression parameters, got {n}")]
    InsufficientObservations { n: usize, params: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lambda grid has {got} points but the {kind} extrapolant needs at least {need}")]
    InsufficientGrid {
        kind: &'static str,
        got: usize,
        need: usize,
    },

    #[error("rational extrapolant has a pole at lambda = -1 (c = {c})")]
    PoleAtTarget { c: f64 },

    #[error("pseudo-replicate at lambda = {lambda}, b = {b} failed: {source}")]
    PseudoReplicate {
        lambda: f64,
        b: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in study output.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InsufficientObservations { .. } => "insufficient_observations",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InsufficientGrid { .. } => "insufficient_grid",
            Error::PoleAtTarget { .. } => "pole_at_target",
            Error::PseudoReplicate { source, .. } => source.tag(),
            Error::EmptyInput => "empty_input",
            Error::UnknownEstimator(_) => "unknown_estimator",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }
}
