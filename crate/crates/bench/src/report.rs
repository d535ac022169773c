//! The comparison report and per-iteration CSV traces.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ppcm_core::linalg::{dist2, dist_inf};
use ppcm_core::vi::IterationDiagnostics;
use ppcm_core::Termination;
use ppcm_core::runtime::RoundRecord;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, BenchError, Result};

pub const SCALE_NOTE: &str =
    "desk-scale instance; absolute iteration counts and timings are not comparable with the 90000x4500 cloud runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportMetadata {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub seed: Option<u64>,
    pub topology: String,
    pub constraint: String,
    pub scale_note: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleResult {
    pub method: String,
    pub seconds: f64,
    pub x_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodResult {
    pub method: String,
    pub p: usize,
    /// Global rounds for distributed runs, iterations for centralized ones.
    pub iterations: usize,
    pub seconds: f64,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    pub consensus_gap: Option<f64>,
    pub converged: bool,
    pub status: String,
    pub error: Option<String>,
    /// One primal block per agent.
    pub final_x: Vec<Vec<f64>>,
    pub params: BTreeMap<String, f64>,
}

impl MethodResult {
    pub fn failed(method: String, p: usize, seconds: f64, err: &BenchError, params: BTreeMap<String, f64>) -> Self {
        Self {
            method,
            p,
            iterations: 0,
            seconds,
            l2_error: None,
            linf_error: None,
            consensus_gap: None,
            converged: false,
            status: "error".into(),
            error: Some(err.to_string()),
            final_x: Vec::new(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub metadata: ReportMetadata,
    pub oracle: OracleResult,
    pub methods: Vec<MethodResult>,
}

impl ComparisonReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::SchemaMismatch { path: path.to_path_buf(), reason: e.to_string() })
    }
}

pub fn status_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max_iterations",
        Termination::Diverged => "diverged",
    }
}

/// Mean over agents of `‖x_i − x*‖₂` and of `‖x_i − x*‖∞`.
pub fn average_errors(xs: &[Vec<f64>], x_star: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let l2 = xs.iter().map(|x| dist2(x, x_star)).sum::<f64>() / k;
    let linf = xs.iter().map(|x| dist_inf(x, x_star)).sum::<f64>() / k;
    (l2, linf)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub fn write_central_trace(path: &Path, iters: &[IterationDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "E", "maxMu", "alphaStar", "predDistance", "objective", "consensusGap"])?;
    for d in iters {
        w.write_record([
            d.iter.to_string(),
            format!("{:?}", d.e),
            format!("{:?}", d.max_mu()),
            opt(d.alpha_star),
            format!("{:?}", d.pred_distance),
            format!("{:?}", d.objective),
            format!("{:?}", d.consensus_gap),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_round_trace(path: &Path, rounds: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["round", "globalE", "consensusGap", "maxMu", "maxR", "objective"])?;
    for r in rounds {
        w.write_record([
            r.round.to_string(),
            format!("{:?}", r.global_e),
            format!("{:?}", r.consensus_gap),
            opt(r.max_mu),
            opt(r.max_r),
            format!("{:?}", r.objective),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// One row of the merged comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableRow {
    pub method: String,
    pub p: usize,
    pub iterations: usize,
    pub seconds: f64,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    pub consensus_gap: Option<f64>,
    pub converged: bool,
}

impl From<&MethodResult> for TableRow {
    fn from(r: &MethodResult) -> Self {
        Self {
            method: r.method.clone(),
            p: r.p,
            iterations: r.iterations,
            seconds: r.seconds,
            l2_error: r.l2_error,
            linf_error: r.linf_error,
            consensus_gap: r.consensus_gap,
            converged: r.converged,
        }
    }
}

/// Rows of all reports, sorted by `(method, p)`; ties keep input order.
pub fn merge_rows(reports: &[ComparisonReport]) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = reports.iter().flat_map(|r| r.methods.iter().map(TableRow::from)).collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.p.cmp(&b.p)));
    rows
}

fn sci(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into())
}

pub fn render_text(rows: &[TableRow]) -> String {
    let header = ["method", "p", "iterations", "seconds", "L2 error", "Linf error", "gap", "converged"];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                r.p.to_string(),
                r.iterations.to_string(),
                format!("{:.3}", r.seconds),
                sci(r.l2_error),
                sci(r.linf_error),
                sci(r.consensus_gap),
                if r.converged { "yes".into() } else { "no".into() },
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |row: &[&str]| {
        let parts: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(k, (c, w))| if k == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&header);
    for row in &cells {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn render_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_average_over_agents() {
        let xs = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        let (l2, linf) = average_errors(&xs, &[2.0, 2.0]);
        assert_eq!(l2, 1.0);
        assert_eq!(linf, 1.0);
        let (l2, linf) = average_errors(&[vec![3.0, 4.0]], &[0.0, 0.0]);
        assert_eq!((l2, linf), (5.0, 4.0));
    }

    #[test]
    fn text_table_is_aligned() {
        let rows = vec![
            TableRow { method: "ppcm".into(), p: 2, iterations: 46, seconds: 0.01, l2_error: Some(7.6e-6), linf_error: Some(2e-6), consensus_gap: Some(1e-6), converged: true },
            TableRow { method: "wagm".into(), p: 2, iterations: 1263, seconds: 0.3, l2_error: None, linf_error: None, consensus_gap: None, converged: false },
        ];
        let text = render_text(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("method"));
        assert!(lines[1].contains("7.600e-6"));
        assert!(lines[2].ends_with("no"));
        let mut buf = Vec::new();
        render_csv(&rows, &mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.starts_with("method,p,iterations,seconds,l2Error,linfError,consensusGap,converged\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
