//! Dataset and profile CSV files, and the number formatting they share.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, Truth};
use crate::simex::SimexProfile;

/// Significant digits for machine-facing files (round-trips an `f64`).
pub const MACHINE_DIGITS: usize = 17;
/// Significant digits for human-facing reports.
pub const HUMAN_DIGITS: usize = 6;

/// Formats like C's `%.{sig}g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_g(v: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub(crate) fn g17(v: f64) -> String {
    fmt_g(v, MACHINE_DIGITS)
}

/// Header `y,w,a,z1,...,zp[,x,eps]`.
pub fn dataset_header(p: usize, with_truth: bool) -> String {
    let mut cols = vec!["y".to_string(), "w".into(), "a".into()];
    cols.extend((1..=p).map(|j| format!("z{j}")));
    if with_truth {
        cols.push("x".into());
        cols.push("eps".into());
    }
    cols.join(",")
}

/// CSV text for a dataset, optionally with the hidden truth columns.
pub fn dataset_to_csv(data: &Dataset, truth: Option<&Truth>) -> String {
    let mut out = dataset_header(data.p(), truth.is_some());
    out.push('\n');
    for i in 0..data.len() {
        let mut fields = vec![g17(data.y()[i]), data.w()[i].to_string(), g17(data.a()[i])];
        fields.extend(data.z().iter().map(|c| g17(c[i])));
        if let Some(t) = truth {
            fields.push(g17(t.x[i]));
            fields.push(g17(t.eps[i]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(path: &Path, data: &Dataset, truth: Option<&Truth>) -> Result<()> {
    fs::write(path, dataset_to_csv(data, truth)).map_err(|e| Error::io(path, e))
}

/// A dataset read back from disk. Truth columns, when present, are returned
/// separately so they never reach an estimator by accident.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub data: Dataset,
    pub x: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
}

pub fn read_dataset_csv(path: &Path) -> Result<DatasetFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_csv(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_dataset_csv(text: &str) -> std::result::Result<DatasetFile, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();

    let with_truth = header.ends_with(&["x".to_string(), "eps".to_string()]);
    let p = header.len().saturating_sub(if with_truth { 5 } else { 3 });
    let expected = dataset_header(p, with_truth);
    if header.join(",") != expected {
        return Err(format!(
            "unexpected header `{}` (expected `{expected}`)",
            header.join(",")
        ));
    }

    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut a = Vec::new();
    let mut z = vec![Vec::new(); p];
    let mut x = Vec::new();
    let mut eps = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let line = row + 2;
        let real = |j: usize| -> std::result::Result<f64, String> {
            record[j]
                .parse::<f64>()
                .map_err(|_| format!("line {line}: `{}` in column {} is not a number", &record[j], header[j]))
        };
        y.push(real(0)?);
        w.push(parse_count(&record[1]).ok_or_else(|| {
            format!("line {line}: count `{}` is not a non-negative integer", &record[1])
        })?);
        a.push(real(2)?);
        for (j, col) in z.iter_mut().enumerate() {
            col.push(real(3 + j)?);
        }
        if with_truth {
            x.push(real(3 + p)?);
            eps.push(real(4 + p)?);
        }
    }
    let data = Dataset::new(y, w, a, z).map_err(|e| e.to_string())?;
    Ok(DatasetFile {
        data,
        x: with_truth.then_some(x),
        eps: with_truth.then_some(eps),
    })
}

fn parse_count(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        let v: f64 = s.parse().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53)).then_some(v as u64)
    })
}

/// Profile CSV: `lambda,intercept,beta_x,beta_z1,...`.
pub fn profile_to_csv(profile: &SimexProfile) -> String {
    let p = profile
        .mean_estimates
        .first()
        .map_or(0, |c| c.beta_z.len());
    let mut out = String::from("lambda,intercept,beta_x");
    for j in 1..=p {
        out.push_str(&format!(",beta_z{j}"));
    }
    out.push('\n');
    for (l, c) in profile.lambdas.iter().zip(&profile.mean_estimates) {
        let mut fields = vec![g17(*l)];
        fields.extend(c.components().into_iter().map(g17));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
