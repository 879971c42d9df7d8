use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentRun, PipelineError};
use crate::evaluation::BoxplotStats;

/// Files written by [`emit_plots`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotFiles {
    /// One CSV per metric.
    pub data: Vec<PathBuf>,
    /// One SVG per metric when rendering was requested.
    pub charts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct BoxRow<'a> {
    code: &'a str,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    mean: f64,
    n: usize,
}

type MetricPick = fn(&ExperimentRun) -> &BoxplotStats;

const METRICS: [(&str, MetricPick); 2] = [("f1", |r| &r.f1), ("accuracy", |r| &r.accuracy)];

/// Writes `boxplot_<metric>.csv` (five-number summary and mean per code, in
/// run order) for F1 and accuracy, plus `boxplot_<metric>.svg` when
/// `render_svg` is set.
pub fn emit_plots(runs: &[ExperimentRun], dir: &Path, render_svg: bool) -> Result<PlotFiles, PipelineError> {
    if runs.is_empty() {
        return Err(PipelineError::Data("no runs to plot".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut files = PlotFiles::default();
    for (metric, pick) in METRICS {
        let codes: Vec<String> = runs.iter().map(|r| r.code.to_string()).collect();
        let path = dir.join(format!("boxplot_{metric}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(PipelineError::data)?;
        for (code, run) in codes.iter().zip(runs) {
            let s = pick(run);
            w.serialize(BoxRow {
                code,
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
                mean: s.mean,
                n: s.n,
            })
            .map_err(PipelineError::data)?;
        }
        w.flush()?;
        files.data.push(path);
        if render_svg {
            let stats: Vec<&BoxplotStats> = runs.iter().map(pick).collect();
            let svg_path = dir.join(format!("boxplot_{metric}.svg"));
            std::fs::write(&svg_path, render(metric, &codes, &stats))?;
            files.charts.push(svg_path);
        }
    }
    Ok(files)
}

/// A plain SVG box-and-whisker chart on a fixed [0, 1] axis.
fn render(metric: &str, codes: &[String], stats: &[&BoxplotStats]) -> String {
    const LEFT: f64 = 50.0;
    const TOP: f64 = 30.0;
    const PLOT_H: f64 = 240.0;
    const SLOT: f64 = 56.0;
    let width = LEFT + SLOT * codes.len() as f64 + 20.0;
    let height = TOP + PLOT_H + 90.0;
    let y = |v: f64| TOP + PLOT_H * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{LEFT}" y="18" font-size="13">{metric}</text>"#);
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"##,
            width - 20.0,
            LEFT - 6.0,
            y(v) + 4.0,
            y = y(v),
        );
    }
    for (i, (code, st)) in codes.iter().zip(stats).enumerate() {
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let (l, r) = (cx - SLOT * 0.3, cx + SLOT * 0.3);
        let _ = writeln!(
            s,
            r#"<line x1="{cx}" x2="{cx}" y1="{}" y2="{}" stroke="black"/>"#,
            y(st.max),
            y(st.min)
        );
        for v in [st.min, st.max] {
            let _ = writeln!(
                s,
                r#"<line x1="{}" x2="{}" y1="{y}" y2="{y}" stroke="black"/>"#,
                cx - SLOT * 0.15,
                cx + SLOT * 0.15,
                y = y(v)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{l}" y="{}" width="{}" height="{}" fill="#cde" stroke="black"/>"##,
            y(st.q3),
            r - l,
            (y(st.q1) - y(st.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{l}" x2="{r}" y1="{y}" y2="{y}" stroke="black" stroke-width="2"/>"#,
            y = y(st.median)
        );
        let _ = writeln!(s, r#"<circle cx="{cx}" cy="{}" r="2.5" fill="red"/>"#, y(st.mean));
        let ty = TOP + PLOT_H + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{ty}" transform="rotate(45 {cx} {ty})">{code}</text>"#
        );
    }
    s.push_str("</svg>\n");
    s
}
