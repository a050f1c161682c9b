//! Report files written by `correlate`:
//!
//! - `correlations.csv`: pools as rows, `<metric>_srcc,<metric>_pcc` column pairs
//! - `correlations.txt`: the same grid as an aligned text table
//! - `cells.csv`: one row per cell (`pool,metric,srcc,pcc,n`), lossless
//! - `scatter/<metric>__<pool>.csv`: `metric_value,score,stem,model` per non-empty pool
//! - `summary.txt`: unmatched counts, failed cells, omitted scatter files

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::correlate::{CorrelationCell, CorrelationOutcome};
use super::{HarnessError, MetricKind};

#[derive(Debug, Clone, Default)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    /// `(pool, metric)` pairs with no joined points, hence no scatter file.
    pub omitted_scatter: Vec<(String, MetricKind)>,
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '=' => '-',
            '&' => '+',
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' => c,
            _ => '_',
        })
        .collect()
}

pub fn write_report(outcome: &CorrelationOutcome, out_dir: impl AsRef<Path>) -> Result<ReportSummary, HarnessError> {
    let out_dir = out_dir.as_ref();
    let scatter_dir = out_dir.join("scatter");
    std::fs::create_dir_all(&scatter_dir).map_err(|e| HarnessError::io(&scatter_dir, e))?;
    let mut summary = ReportSummary::default();
    let pools = outcome.pool_labels();

    // wide table
    let wide = out_dir.join("correlations.csv");
    let mut header = vec!["pool".to_string()];
    for m in &outcome.metrics {
        header.push(format!("{}_srcc", m.name()));
        header.push(format!("{}_pcc", m.name()));
    }
    let mut rows = vec![header];
    for pool in &pools {
        let mut row = vec![pool.to_string()];
        for &m in &outcome.metrics {
            match outcome.cell(pool, m) {
                Some(c) => {
                    row.push(c.srcc.to_string());
                    row.push(c.pcc.to_string());
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        rows.push(row);
    }
    write_csv(&wide, &rows)?;
    summary.files.push(wide);

    let text_path = out_dir.join("correlations.txt");
    write_text(&text_path, &render_table(outcome))?;
    summary.files.push(text_path);

    let cells_path = out_dir.join("cells.csv");
    {
        let wrap = |e: csv::Error| HarnessError::parse(cells_path.display().to_string(), e);
        let mut w = csv::Writer::from_path(&cells_path).map_err(wrap)?;
        for c in &outcome.cells {
            w.serialize(c).map_err(wrap)?;
        }
        w.flush().map_err(|e| HarnessError::io(&cells_path, e))?;
    }
    summary.files.push(cells_path);

    for pool in &outcome.pools {
        for &m in &outcome.metrics {
            let points = pool.points.get(&m).map(Vec::as_slice).unwrap_or(&[]);
            if points.is_empty() {
                summary.omitted_scatter.push((pool.label.clone(), m));
                continue;
            }
            let path = scatter_dir.join(format!("{}__{}.csv", m.name(), slug(&pool.label)));
            let mut rows = vec![vec![
                "metric_value".to_string(),
                "score".into(),
                "stem".into(),
                "model".into(),
            ]];
            rows.extend(
                points
                    .iter()
                    .map(|p| vec![p.metric_value.to_string(), p.score.to_string(), p.stem.clone(), p.model_id.clone()]),
            );
            write_csv(&path, &rows)?;
            summary.files.push(path);
        }
    }

    let mut text = String::new();
    let _ = writeln!(text, "pools: {}", pools.len());
    let _ = writeln!(text, "cells: {}", outcome.cells.len());
    let _ = writeln!(text, "unmatched metric records: {}", outcome.unmatched_metric_records);
    let _ = writeln!(text, "unmatched scores: {}", outcome.unmatched_scores);
    for f in &outcome.failures {
        let metric = f.metric.map(|m| m.name()).unwrap_or("-");
        let _ = writeln!(text, "failed cell: {} / {metric}: {}", f.pool, f.reason);
    }
    for (pool, m) in &summary.omitted_scatter {
        let _ = writeln!(text, "omitted scatter: {} / {} (no points)", pool, m.name());
    }
    let summary_path = out_dir.join("summary.txt");
    write_text(&summary_path, &text)?;
    summary.files.push(summary_path);
    Ok(summary)
}

/// Aligned text grid: one row per pool, an SRCC/PCC column pair per metric.
pub fn render_table(outcome: &CorrelationOutcome) -> String {
    let pools = outcome.pool_labels();
    let pool_width = pools.iter().map(|p| p.len()).chain([4]).max().unwrap_or(4);
    let group_width = outcome
        .metrics
        .iter()
        .map(|m| m.label().len())
        .chain([13])
        .max()
        .unwrap_or(13);
    let col = (group_width - 1) / 2;

    let mut out = String::new();
    let _ = write!(out, "{:pool_width$}", "");
    for m in &outcome.metrics {
        let _ = write!(out, " | {:^group_width$}", m.label());
    }
    out.push('\n');
    let _ = write!(out, "{:pool_width$}", "pool");
    for _ in &outcome.metrics {
        let _ = write!(out, " | {:>col$} {:>w2$}", "SRCC", "PCC", w2 = group_width - col - 1);
    }
    out.push('\n');
    let rule = pool_width + outcome.metrics.len() * (group_width + 3);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for pool in pools {
        let _ = write!(out, "{pool:pool_width$}");
        for &m in &outcome.metrics {
            let (s, p) = match outcome.cell(pool, m) {
                Some(c) => (format!("{:.2}", c.srcc), format!("{:.2}", c.pcc)),
                None => ("n/a".to_string(), "n/a".to_string()),
            };
            let _ = write!(out, " | {s:>col$} {p:>w2$}", w2 = group_width - col - 1);
        }
        out.push('\n');
    }
    out
}

pub fn read_cells_csv(path: impl AsRef<Path>) -> Result<Vec<CorrelationCell>, HarnessError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::parse(path.display().to_string(), e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::parse(path.display().to_string(), e)))
        .collect()
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let wrap = |e: csv::Error| HarnessError::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
