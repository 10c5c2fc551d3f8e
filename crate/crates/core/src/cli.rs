//! Command-line front end: `generate`, `fit`, `study` and `curve`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 estimation failure, 3 I/O.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::io::{fmt_g, g17, profile_to_csv, read_dataset_csv, write_dataset_csv, HUMAN_DIGITS};
use crate::model::{CoefficientVector, PopulationMoments};
use crate::rng::RngStream;
use crate::simex::{attenuation_curve, poi_simex, Extrapolant, PerturbationScale, SimexConfig, VarianceMode};
use crate::study::{emit_boxplot_svg, emit_study_csv, run_study_with_threads, StudyConfig};
use crate::synth::{generate_dataset, AreaMode, GenerationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "poisimex", version, about = "SIMEX for linear regression with Poisson surrogate counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset from the linear model with Poisson surrogate counts
    Generate(GenerateArgs),
    /// Fit the SIMEX estimator to a dataset CSV
    Fit(FitArgs),
    /// Run a replicated Monte Carlo study from a JSON config
    Study(StudyArgs),
    /// Print the large-sample attenuation curve of the naive slope
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of subjects (at least 2)
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Seed for the random stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Intercept
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    beta0: f64,
    /// Coefficient of the true density X
    #[arg(long = "beta-x", default_value_t = 1.0, allow_hyphen_values = true)]
    beta_x: f64,
    /// Coefficients of the error-free covariates, comma separated (one Z column each)
    #[arg(long = "beta-z", default_value = "0.5", value_parser = parse_list, allow_hyphen_values = true)]
    beta_z: FloatList,
    /// Standard deviation of the regression noise
    #[arg(long = "sigma-eps", default_value_t = 5.0)]
    sigma_eps: f64,
    /// Gamma shape and scale of X, as `shape,scale`
    #[arg(long = "x-gamma", default_value = "1,10", value_parser = parse_pair)]
    x_gamma: (f64, f64),
    /// Uniform bounds of each Z column, as `low,high`
    #[arg(long = "z-uniform", default_value = "0.5,9", value_parser = parse_pair, allow_hyphen_values = true)]
    z_uniform: (f64, f64),
    /// Area shared by every subject
    #[arg(long, default_value_t = 1.0)]
    area: f64,
    /// Also write the true densities and noise (columns x, eps)
    #[arg(long = "keep-truth")]
    keep_truth: bool,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Dataset CSV (`y,w,a,z1,...`)
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated lambda grid; must include 0
    #[arg(long = "lambda-grid", default_value = "0,0.5,1,1.5,2", value_parser = parse_list)]
    lambda_grid: FloatList,
    /// Pseudo-replicates per lambda
    #[arg(long, default_value_t = 100)]
    b: usize,
    /// linear, quadratic or rational
    #[arg(long, default_value = "quadratic", value_parser = parse_extrapolant)]
    extrapolant: Extrapolant,
    /// `estimated`, or `known:<v>` for a known density-scale error variance
    #[arg(long, default_value = "estimated", value_parser = parse_variance)]
    variance: VarianceMode,
    /// Seed for the pseudo-errors
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb the density (default) or the raw count
    #[arg(long = "perturb-scale", default_value = "density", value_parser = parse_scale)]
    perturb_scale: PerturbationScale,
    /// Worker threads for the pseudo-regressions
    #[arg(long)]
    threads: Option<usize>,
    /// Write the averaged profile (`lambda,intercept,beta_x,beta_z1,...`)
    #[arg(long = "profile-out")]
    profile_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Study configuration JSON
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// E[X]
    #[arg(long = "mean-x", allow_hyphen_values = true)]
    mean_x: f64,
    /// Var[X]
    #[arg(long = "var-x", allow_hyphen_values = true)]
    var_x: f64,
    /// True slope
    #[arg(long, allow_hyphen_values = true)]
    beta1: f64,
    /// Comma-separated lambda values (each at least -1)
    #[arg(long = "lambda-grid", value_parser = parse_list, allow_hyphen_values = true)]
    lambda_grid: FloatList,
}

/// A comma-separated list of numbers, parsed as one flag value.
#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

fn parse_list(s: &str) -> Result<FloatList, String> {
    parse_numbers(s).map(FloatList)
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        })
        .collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_numbers(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

fn parse_extrapolant(s: &str) -> Result<Extrapolant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variance(s: &str) -> Result<VarianceMode, String> {
    if s == "estimated" {
        return Ok(VarianceMode::Estimated);
    }
    let v = s
        .strip_prefix("known:")
        .ok_or_else(|| format!("expected `estimated` or `known:<v>`, got `{s}`"))?;
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(VarianceMode::Known(x)),
        _ => Err(format!("known variance must be a non-negative number, got `{v}`")),
    }
}

fn parse_scale(s: &str) -> Result<PerturbationScale, String> {
    match s {
        "density" => Ok(PerturbationScale::Density),
        "count" => Ok(PerturbationScale::Count),
        _ => Err(format!("expected `density` or `count`, got `{s}`")),
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::RankDeficient { .. }
        | Error::InsufficientObservations { .. }
        | Error::PoleAtTarget { .. }
        | Error::PseudoReplicate { .. } => EXIT_RUNTIME,
        Error::DimensionMismatch(_)
        | Error::InvalidParameter(_)
        | Error::InsufficientGrid { .. }
        | Error::EmptyInput
        | Error::UnknownEstimator(_)
        | Error::Parse { .. } => EXIT_INVALID,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INVALID
                }
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Fit(a) => cmd_fit(a, out, err),
        Command::Study(a) => cmd_study(a, out, err),
        Command::Curve(a) => cmd_curve(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = GenerationConfig {
        n: a.n as usize,
        beta: CoefficientVector {
            intercept: a.beta0,
            beta_x: a.beta_x,
            beta_z: a.beta_z.0,
            residual_variance: 0.0,
        },
        sigma_eps: a.sigma_eps,
        x_shape: a.x_gamma.0,
        x_scale: a.x_gamma.1,
        z_low: a.z_uniform.0,
        z_high: a.z_uniform.1,
        area: AreaMode::Constant(a.area),
    };
    let synthetic = generate_dataset(&cfg, &RngStream::new(a.seed, &[]))?;
    write_dataset_csv(&a.out, &synthetic.data, a.keep_truth.then_some(&synthetic.truth))?;
    writeln!(out, "wrote {} subjects to {}", cfg.n, a.out.display()).map_err(stdout_err)
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let file = read_dataset_csv(&a.data)?;
    let data = file.data;
    let cfg = SimexConfig {
        lambda_grid: a.lambda_grid.0,
        b_reps: a.b,
        extrapolant: a.extrapolant,
        variance_mode: a.variance.clone(),
        perturbation_scale: a.perturb_scale,
        keep_raw: false,
    };
    let stream = RngStream::new(a.seed, &[]);
    let estimate = match a.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?
            .install(|| poi_simex(&data, &cfg, &stream)),
        None => poi_simex(&data, &cfg, &stream),
    }?;

    for w in &estimate.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if let Some(path) = &a.profile_out {
        fs::write(path, profile_to_csv(&estimate.profile)).map_err(|e| Error::io(path, e))?;
    }

    let variance = match &a.variance {
        VarianceMode::Known(v) => format!("known:{}", g17(*v)),
        _ => "estimated".to_string(),
    };
    let sigma2_mean =
        estimate.sigma_hat.iter().map(|s| s * s).sum::<f64>() / estimate.sigma_hat.len() as f64;
    let simex = &estimate.coefficients;
    let naive = &estimate.naive;
    let mut report = vec![
        format!("n={}", data.len()),
        format!("extrapolant={}", cfg.extrapolant),
        format!("variance={variance}"),
        format!("b={}", cfg.b_reps),
        format!("beta_x_simex={}", g17(simex.beta_x)),
        format!("beta_x_naive={}", g17(naive.beta_x)),
        format!("intercept_simex={}", g17(simex.intercept)),
        format!("intercept_naive={}", g17(naive.intercept)),
    ];
    for (j, (s, n)) in simex.beta_z.iter().zip(&naive.beta_z).enumerate() {
        report.push(format!("beta_z{}_simex={}", j + 1, g17(*s)));
        report.push(format!("beta_z{}_naive={}", j + 1, g17(*n)));
    }
    report.push(format!("sigma2_hat_mean={}", g17(sigma2_mean)));
    report.push(format!("converged={}", estimate.converged()));
    report.push(format!("fallback_used={}", estimate.fallback_used()));
    for line in report {
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_study(a: StudyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let cfg: StudyConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: a.config.clone(),
        message: e.to_string(),
    })?;
    let dir = a.out.unwrap_or_else(|| cfg.output_dir.clone());
    let threads = a.threads.unwrap_or_else(rayon::current_num_threads);
    let result = run_study_with_threads(&cfg, threads)?;

    emit_study_csv(&result, &dir)?;
    for &e in &result.estimators {
        emit_boxplot_svg(&result, e, &dir.join(format!("boxplot_{}.svg", e.name())))?;
    }
    if let Some(d) = &result.degraded {
        let _ = writeln!(err, "warning: study degraded: {d}");
    }

    let h = |v: f64| fmt_g(v, HUMAN_DIGITS);
    for g in &result.summaries {
        let line = match &g.summary {
            Some(s) => format!(
                "n={} estimator={} median={} q1={} q3={} mean={} sd={} count={} failed={}",
                g.n,
                g.estimator,
                h(s.median),
                h(s.q1),
                h(s.q3),
                h(s.mean),
                h(s.sd),
                s.n,
                g.failed
            ),
            None => format!("n={} estimator={} count=0 failed={}", g.n, g.estimator, g.failed),
        };
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    writeln!(out, "results written to {}", dir.display()).map_err(stdout_err)
}

fn cmd_curve(a: CurveArgs, out: &mut dyn Write) -> Result<(), Error> {
    let moments = PopulationMoments::new(a.mean_x, a.var_x)?;
    let rows = a
        .lambda_grid
        .0
        .iter()
        .map(|&l| attenuation_curve(&moments, a.beta1, l).map(|v| format!("{},{}", g17(l), g17(v))))
        .collect::<Result<Vec<_>, _>>()?;
    writeln!(out, "lambda,attenuated_beta").map_err(stdout_err)?;
    for r in rows {
        writeln!(out, "{r}").map_err(stdout_err)?;
    }
    Ok(())
}
