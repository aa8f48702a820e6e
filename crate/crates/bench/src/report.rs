//! CSV and markdown reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::suite::RunRow;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Per-algorithm means over admitted runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub runs: usize,
    pub admitted: usize,
    pub mean_outer_iters: f64,
    pub mean_total_fp_iters: f64,
    pub mean_fpi_per_outer: f64,
    pub mean_wall_ms: f64,
}

fn csv_err(path: &str) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv { path: path.to_string(), source }
}

pub fn write_runs_csv<W: Write>(rows: &[RunRow], writer: W, path: &str) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "instance_id",
        "algorithm",
        "outer_iters",
        "total_fp_iters",
        "mean_fpi_per_outer",
        "final_delta",
        "final_dual_value",
        "status",
        "wall_ms",
    ])
    .map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ReportError::Io { path: path.to_string(), source })
}

pub fn read_runs_csv<R: Read>(reader: R, path: &str) -> Result<Vec<RunRow>, ReportError> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().collect::<Result<Vec<RunRow>, _>>().map_err(csv_err(path))
}

pub fn save_runs(rows: &[RunRow], path: &Path) -> Result<(), ReportError> {
    let shown = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|source| ReportError::Io { path: shown.clone(), source })?;
    write_runs_csv(rows, file, &shown)
}

pub fn load_runs(path: &Path) -> Result<Vec<RunRow>, ReportError> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| ReportError::Io { path: shown.clone(), source })?;
    read_runs_csv(file, &shown)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Groups rows by algorithm in order of first appearance.
pub fn summarize(rows: &[RunRow]) -> Vec<AlgorithmSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunRow>> = BTreeMap::new();
    for row in rows {
        let name = row.algorithm.as_str();
        if !groups.contains_key(name) {
            order.push(name);
        }
        groups.entry(name).or_default().push(row);
    }
    order
        .into_iter()
        .map(|name| {
            let all = &groups[name];
            let ok: Vec<&RunRow> = all.iter().copied().filter(|r| r.admitted()).collect();
            AlgorithmSummary {
                algorithm: name.to_string(),
                runs: all.len(),
                admitted: ok.len(),
                mean_outer_iters: mean(ok.iter().map(|r| r.outer_iters as f64)),
                mean_total_fp_iters: mean(ok.iter().map(|r| r.total_fp_iters as f64)),
                mean_fpi_per_outer: mean(ok.iter().map(|r| r.mean_fpi_per_outer)),
                mean_wall_ms: mean(ok.iter().map(|r| r.wall_ms)),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[AlgorithmSummary], writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summary {
        w.serialize(s).map_err(csv_err("<summary>"))?;
    }
    w.flush().map_err(|source| ReportError::Io { path: "<summary>".into(), source })
}

fn bold_if(cond: bool, text: String) -> String {
    if cond {
        format!("**{text}**")
    } else {
        text
    }
}

/// Markdown table of per-algorithm means. The best value of each metric is in bold.
pub fn render_markdown(rows: &[RunRow]) -> String {
    let summary = summarize(rows);
    let best = |f: fn(&AlgorithmSummary) -> f64| {
        summary.iter().map(f).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    };
    let best_outer = best(|s| s.mean_outer_iters);
    let best_fpi = best(|s| s.mean_fpi_per_outer);
    let best_wall = best(|s| s.mean_wall_ms);

    let mut out = String::new();
    out.push_str("| Algorithm | Admitted | Time (ms) | Per-Iteration FPIs | Outer Iterations | Total FPIs |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for s in &summary {
        out.push_str(&format!(
            "| {} | {}/{} | {} | {} | {} | {:.1} |\n",
            s.algorithm,
            s.admitted,
            s.runs,
            bold_if(s.mean_wall_ms == best_wall, format!("{:.2}", s.mean_wall_ms)),
            bold_if(s.mean_fpi_per_outer == best_fpi, format!("{:.2}", s.mean_fpi_per_outer)),
            bold_if(s.mean_outer_iters == best_outer, format!("{:.2}", s.mean_outer_iters)),
            s.mean_total_fp_iters,
        ));
    }

    let mut ranked: Vec<&AlgorithmSummary> = summary.iter().filter(|s| s.mean_outer_iters.is_finite()).collect();
    if ranked.len() > 1 {
        ranked.sort_by(|a, b| a.mean_outer_iters.total_cmp(&b.mean_outer_iters));
        let names: Vec<&str> = ranked.iter().map(|s| s.algorithm.as_str()).collect();
        out.push_str(&format!("\nOuter iterations, fewest first: {}\n", names.join(" < ")));
        ranked.sort_by(|a, b| a.mean_fpi_per_outer.total_cmp(&b.mean_fpi_per_outer));
        let names: Vec<&str> = ranked.iter().map(|s| s.algorithm.as_str()).collect();
        out.push_str(&format!("Per-iteration FPIs, fewest first: {}\n", names.join(" < ")));
    }

    let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        *statuses.entry(r.status.as_str()).or_default() += 1;
    }
    if !statuses.is_empty() {
        let parts: Vec<String> = statuses.iter().map(|(s, n)| format!("{s}: {n}")).collect();
        out.push_str(&format!("\nRun statuses: {}\n", parts.join(", ")));
    }
    out
}

pub fn emit_report(rows: &[RunRow], path: &Path, format: ReportFormat) -> Result<(), ReportError> {
    match format {
        ReportFormat::Csv => save_runs(rows, path),
        ReportFormat::Markdown => std::fs::write(path, render_markdown(rows)).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}
