//! CSV tables and the SVG boxplot for a finished study.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::g17;
use crate::study::{CellOutcome, Estimator, StudyResult};

/// `n,rep,estimator,beta_x,intercept,beta_z1...,status`; numeric fields
/// are empty for failed cells.
pub fn cells_csv(result: &StudyResult) -> String {
    let mut out = String::from("n,rep,estimator,beta_x,intercept");
    for j in 1..=result.p {
        let _ = write!(out, ",beta_z{j}");
    }
    out.push_str(",status\n");
    for cell in &result.cells {
        let mut fields = vec![cell.n.to_string(), cell.rep.to_string(), cell.estimator.name().to_string()];
        match &cell.outcome {
            CellOutcome::Ok(e) => {
                let c = &e.coefficients;
                fields.push(g17(c.beta_x));
                fields.push(g17(c.intercept));
                fields.extend((0..result.p).map(|j| c.beta_z.get(j).map_or(String::new(), |v| g17(*v))));
            }
            CellOutcome::Failed { .. } => fields.extend(std::iter::repeat_n(String::new(), 2 + result.p)),
        }
        fields.push(cell.status().to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `n,estimator,min,q1,median,q3,max,mean,sd,count`, where `count` is the
/// number of successful cells summarized.
pub fn summary_csv(result: &StudyResult) -> String {
    let mut out = String::from("n,estimator,min,q1,median,q3,max,mean,sd,count\n");
    for g in &result.summaries {
        let stats = match &g.summary {
            Some(s) => [s.min, s.q1, s.median, s.q3, s.max, s.mean, s.sd]
                .iter()
                .map(|v| g17(*v))
                .collect::<Vec<_>>(),
            None => vec![String::new(); 7],
        };
        let count = g.summary.map_or(0, |s| s.n);
        let _ = writeln!(out, "{},{},{},{count}", g.n, g.estimator.name(), stats.join(","));
    }
    out
}

/// Writes `cells.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_study_csv(result: &StudyResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cells = dir.join("cells.csv");
    let summary = dir.join("summary.csv");
    fs::write(&cells, cells_csv(result)).map_err(|e| Error::io(&cells, e))?;
    fs::write(&summary, summary_csv(result)).map_err(|e| Error::io(&summary, e))?;
    Ok((cells, summary))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Standalone SVG: one box per sample size (box q1..q3, median line,
/// whiskers to min and max) and a dashed line at the true beta_x.
pub fn boxplot_svg(result: &StudyResult, estimator: Estimator) -> Result<String> {
    if !result.estimators.contains(&estimator) {
        return Err(Error::UnknownEstimator(estimator.name().to_string()));
    }
    let groups: Vec<_> = result
        .sample_sizes
        .iter()
        .map(|&n| (n, result.summary(n, estimator)))
        .collect();

    let mut lo = result.true_beta_x;
    let mut hi = result.true_beta_x;
    for s in groups.iter().filter_map(|(_, s)| *s) {
        lo = lo.min(s.min);
        hi = hi.max(s.max);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_of = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;
    let slot = plot_w / groups.len() as f64;
    let half = (slot * 0.3).min(30.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{} estimates of beta_x by sample size</text>"#,
        WIDTH / 2.0,
        estimator.name()
    );

    // axes and y ticks
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    for i in 0..=5 {
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }

    let ref_y = y_of(result.true_beta_x);
    let _ = writeln!(
        svg,
        r#"<line class="reference" x1="{LEFT}" y1="{ref_y:.2}" x2="{:.2}" y2="{ref_y:.2}" stroke="red" stroke-dasharray="6,4"/>"#,
        LEFT + plot_w
    );

    for (i, (n, summary)) in groups.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            TOP + plot_h + 18.0
        );
        let Some(s) = summary else { continue };
        let (ymin, yq1, ymed, yq3, ymax) = (y_of(s.min), y_of(s.q1), y_of(s.median), y_of(s.q3), y_of(s.max));
        let _ = writeln!(svg, r#"<g class="box" data-n="{n}">"#);
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{ymax:.2}" x2="{cx:.2}" y2="{yq3:.2}" stroke="black"/><line x1="{cx:.2}" y1="{yq1:.2}" x2="{cx:.2}" y2="{ymin:.2}" stroke="black"/>"#
        );
        for y in [ymin, ymax] {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                cx - half / 2.0,
                cx + half / 2.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            cx - half,
            2.0 * half,
            yq1 - yq3
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half
        );
        svg.push_str("</g>\n");
    }

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sample size</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_boxplot_svg(result: &StudyResult, estimator: Estimator, out: &Path) -> Result<()> {
    let svg = boxplot_svg(result, estimator)?;
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{summarize, Cell, CellEstimate, GroupSummary};
    use crate::CoefficientVector;

    fn one_cell() -> StudyResult {
        let coefficients = CoefficientVector::from_components(&[2.0, 0.95, 0.5], 25.0);
        StudyResult {
            sample_sizes: vec![100],
            estimators: vec![Estimator::Naive],
            p: 1,
            true_beta_x: 1.0,
            cells: vec![Cell {
                n: 100,
                rep: 0,
                estimator: Estimator::Naive,
                outcome: CellOutcome::Ok(CellEstimate {
                    coefficients,
                    converged: true,
                    fallback_used: false,
                }),
            }],
            summaries: vec![GroupSummary {
                n: 100,
                estimator: Estimator::Naive,
                summary: Some(summarize(&[0.95]).unwrap()),
                failed: 0,
            }],
            degraded: None,
        }
    }

    #[test]
    fn single_cell_csv() {
        let r = one_cell();
        let cells = cells_csv(&r);
        assert_eq!(cells.lines().count(), 2);
        assert_eq!(cells, "n,rep,estimator,beta_x,intercept,beta_z1,status\n100,0,naive,0.94999999999999996,2,0.5,ok\n");
        assert_eq!(summary_csv(&r).lines().count(), 2);
    }

    #[test]
    fn empty_estimator_list_gives_headers() {
        let mut r = one_cell();
        r.estimators.clear();
        r.cells.clear();
        r.summaries.clear();
        assert_eq!(cells_csv(&r), "n,rep,estimator,beta_x,intercept,beta_z1,status\n");
        assert_eq!(summary_csv(&r), "n,estimator,min,q1,median,q3,max,mean,sd,count\n");
    }

    #[test]
    fn degenerate_box_and_determinism() {
        let r = one_cell();
        let a = boxplot_svg(&r, Estimator::Naive).unwrap();
        assert_eq!(a, boxplot_svg(&r, Estimator::Naive).unwrap());
        assert_eq!(a.matches(r#"class="box""#).count(), 1);
        assert!(a.contains(r#"height="0.00""#));
        assert!(matches!(
            boxplot_svg(&r, Estimator::PoiSimexKnown),
            Err(Error::UnknownEstimator(_))
        ));
    }
}
