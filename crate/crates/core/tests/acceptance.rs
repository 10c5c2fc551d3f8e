//! Acceptance criteria A1–A9. Each test prints one PASS/FAIL line; run with
//! `cargo test -p poisimex --test acceptance -- --nocapture` to see them.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use common::exact_ols;
use poisimex::sampling::sample_uniform;
use poisimex::simex::{estimate_error_variances, extrapolate, fit_curve};
use poisimex::study::{run_study, Estimator, StudyConfig, StudyResult};
use poisimex::{
    generate_dataset, naive_fit, ols_fit, simex_profile, Dataset, Extrapolant, GenerationConfig,
    RngStream, SimexConfig, SyntheticDataset,
};

const GRID: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

fn verdict(id: &str, ok: bool, detail: String) {
    println!("{id} {}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}

/// Large-sample naive slope for X ~ Gamma(1, 10), unit areas, beta_x = 1.
fn attenuated(lambda: f64) -> f64 {
    100.0 / (100.0 + (1.0 + lambda) * 10.0)
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn reference(n: usize, seed: u64) -> SyntheticDataset {
    generate_dataset(&GenerationConfig::reference(n), &RngStream::new(seed, &[])).unwrap()
}

/// The full consistency study from the shipped config, run once.
fn consistency_study() -> &'static StudyResult {
    static STUDY: OnceLock<StudyResult> = OnceLock::new();
    STUDY.get_or_init(|| {
        let text = std::fs::read_to_string(configs_dir().join("consistency_study.json")).unwrap();
        let cfg: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg.simex.extrapolant, Extrapolant::Rational);
        let start = Instant::now();
        let result = run_study(&cfg).unwrap();
        println!(
            "consistency study: {} cells in {:.1} s",
            result.cells.len(),
            start.elapsed().as_secs_f64()
        );
        result
    })
}

#[test]
fn a1_consistency_reproduction() {
    let study = consistency_study();
    let large = study.summary(5000, Estimator::PoiSimexEstimated).unwrap();
    let small = study.summary(100, Estimator::PoiSimexEstimated).unwrap();
    let failed: usize = study.summaries.iter().map(|g| g.failed).sum();
    let ok = (large.median - 1.0).abs() < 0.05
        && large.iqr() <= small.iqr() / 3.0
        && large.n == 200;
    verdict(
        "A1",
        ok,
        format!(
            "median(5000)={:.4} (1 ± 0.05), IQR(5000)={:.4} <= IQR(100)/3={:.4}, failed cells={failed}",
            large.median,
            large.iqr(),
            small.iqr() / 3.0
        ),
    );
}

#[test]
fn a2_known_vs_estimated_variance() {
    let study = consistency_study();
    let known = study.summary(5000, Estimator::PoiSimexKnown).unwrap().median;
    let estimated = study.summary(5000, Estimator::PoiSimexEstimated).unwrap().median;
    let d = (known - estimated).abs();
    verdict(
        "A2",
        d < 0.05,
        format!("median known={known:.4}, estimated={estimated:.4}, |diff|={d:.4} < 0.05"),
    );
}

#[test]
fn a3_attenuation_profile() {
    let data = reference(20_000, 301).data;
    let cfg = SimexConfig { b_reps: 200, ..SimexConfig::default() };
    let profile = simex_profile(&data, &cfg, &RngStream::new(302, &[])).unwrap();
    let slopes = profile.series(1).unwrap();
    let worst = GRID
        .iter()
        .zip(&slopes)
        .map(|(l, b)| (b - attenuated(*l)).abs())
        .fold(0.0, f64::max);
    verdict(
        "A3",
        worst < 0.02,
        format!("max |mean beta_x(lambda) - 100/(100+(1+lambda)10)| = {worst:.4} < 0.02"),
    );
}

#[test]
fn a4_naive_bias() {
    let fit = naive_fit(&reference(5000, 401).data).unwrap();
    let d = (fit.beta_x - 100.0 / 110.0).abs();
    verdict("A4", d < 0.03, format!("naive beta_x={:.4}, |diff from 100/110|={d:.4} < 0.03", fit.beta_x));
}

#[test]
fn a5_variance_estimate() {
    let check = |n: usize, seed: u64| {
        let data = reference(n, seed).data;
        let s2 = estimate_error_variances(&data);
        let w_bar = data.w().iter().sum::<u64>() as f64 / n as f64;
        assert!(s2.iter().all(|&s| s == w_bar));
        s2[0]
    };
    let at_5k = check(5000, 501);
    let at_100k = check(100_000, 502);
    let ok = (at_5k - 10.0).abs() < 0.5 && (at_100k - 10.0).abs() < 0.15;
    verdict(
        "A5",
        ok,
        format!("sigma2_hat(N=5000)={at_5k:.4} (10 ± 0.5), sigma2_hat(N=1e5)={at_100k:.4} (10 ± 0.15)"),
    );
}

#[test]
fn a6_extrapolant_exactness() {
    let curve: Vec<f64> = GRID.iter().map(|&l| attenuated(l)).collect();
    let rational = fit_curve(&GRID, &curve, Extrapolant::Rational).unwrap();
    let rational_err = (extrapolate(&rational).unwrap() - 1.0).abs();

    let mut poly_err: f64 = 0.0;
    let mut s = RngStream::new(601, &[]);
    for _ in 0..100 {
        let p = sample_uniform(&mut s, -10.0, 10.0, 3).unwrap();
        let quad: Vec<f64> = GRID.iter().map(|l| p[0] + p[1] * l + p[2] * l * l).collect();
        let fit = fit_curve(&GRID, &quad, Extrapolant::Quadratic).unwrap();
        poly_err = fit.params.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(poly_err, f64::max);
        let line: Vec<f64> = GRID.iter().map(|l| p[0] + p[1] * l).collect();
        let fit = fit_curve(&GRID, &line, Extrapolant::Linear).unwrap();
        poly_err = fit.params.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(poly_err, f64::max);
    }
    let ok = rational_err < 1e-6 && !rational.fallback_used && poly_err < 1e-10;
    verdict(
        "A6",
        ok,
        format!("rational |g(-1) - 1|={rational_err:.2e} < 1e-6, polynomial max param error={poly_err:.2e} < 1e-10"),
    );
}

#[test]
fn a7_ols_oracle() {
    let mut s = RngStream::new(701, &[]);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let p = (case % 4) as usize;
        let n = p + 3 + (s.next_u64() % (48 - p as u64)) as usize;
        let v = sample_uniform(&mut s, 0.0, 30.0, n).unwrap();
        let z: Vec<Vec<f64>> = (0..p).map(|_| sample_uniform(&mut s, -5.0, 5.0, n).unwrap()).collect();
        let y = sample_uniform(&mut s, -50.0, 50.0, n).unwrap();
        let fit = ols_fit(&v, &z, &y).unwrap();
        let (beta, _) = exact_ols(&v, &z, &y);
        let err: f64 = fit.components().iter().zip(&beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(err / norm);
    }
    verdict("A7", worst < 1e-10, format!("100 designs, max relative error vs exact solve={worst:.2e} < 1e-10"));
}

fn run_bin(args: &[&str]) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_poisimex")).args(args).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    o.stdout
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn a8_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.csv");
    run_bin(&["generate", "--n", "2000", "--seed", "801", "--out", data.to_str().unwrap()]);

    let fit = |threads: &str| {
        run_bin(&[
            "fit", "--data", data.to_str().unwrap(), "--extrapolant", "rational", "--b", "50",
            "--seed", "802", "--threads", threads,
        ])
    };
    let fits = [fit("1"), fit("1"), fit("8"), fit("8")];
    let fit_ok = fits.iter().all(|f| f == &fits[0]);

    let config = configs_dir().join("smoke_study.json");
    let study = |threads: &str, name: &str| {
        let out = tmp.path().join(name);
        let stdout = run_bin(&[
            "study", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--threads", threads,
        ]);
        let text = String::from_utf8(stdout).unwrap().replace(out.to_str().unwrap(), "<out>");
        (text, dir_contents(&out))
    };
    let runs = [study("1", "s1a"), study("1", "s1b"), study("8", "s8a"), study("8", "s8b")];
    let study_ok = runs.iter().all(|r| r == &runs[0]) && runs[0].1.len() == 5;

    verdict(
        "A8",
        fit_ok && study_ok,
        format!("fit stdout identical over 2 reruns x threads {{1, 8}}: {fit_ok}; study files and stdout identical: {study_ok}"),
    );
}

#[test]
fn a9_distributional_identities() {
    let s = reference(1_000_000, 901);
    let data: &Dataset = &s.data;
    let n = data.len() as f64;
    let w: Vec<f64> = data.w().iter().map(|&w| w as f64).collect();
    let w_bar = w.iter().sum::<f64>() / n;
    let x_bar = s.truth.x.iter().sum::<f64>() / n;
    let marginal = (w_bar - x_bar).abs();

    let edges = [0.0, 2.0, 5.0, 10.0, 20.0, f64::INFINITY];
    let mut worst: f64 = 0.0;
    let mut smallest = usize::MAX;
    for bin in edges.windows(2) {
        let idx: Vec<usize> = (0..data.len())
            .filter(|&i| {
                let m = s.truth.x[i] * data.a()[i];
                m >= bin[0] && m < bin[1]
            })
            .collect();
        smallest = smallest.min(idx.len());
        let k = idx.len() as f64;
        let mean_xa = idx.iter().map(|&i| s.truth.x[i] * data.a()[i]).sum::<f64>() / k;
        let mean_w = idx.iter().map(|&i| w[i]).sum::<f64>() / k;
        let d: Vec<f64> = idx.iter().map(|&i| w[i] - s.truth.x[i] * data.a()[i]).collect();
        let md = d.iter().sum::<f64>() / k;
        let var_d = d.iter().map(|v| (v - md) * (v - md)).sum::<f64>() / (k - 1.0);
        worst = worst.max((mean_w / mean_xa - 1.0).abs()).max((var_d / mean_xa - 1.0).abs());
    }
    let ok = marginal < 0.05 && worst < 0.05 && smallest >= 100_000;
    verdict(
        "A9",
        ok,
        format!(
            "|mean W - mean X|={marginal:.4} < 0.05 at N=1e6; conditional mean/variance max rel. gap={worst:.4} < 0.05 (min bin {smallest})"
        ),
    );
}
