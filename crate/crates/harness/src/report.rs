//! Experiment reports: a comparison table for people and JSON for tools.

use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub coverage: f64,
    pub average_width: f64,
    pub rmse: f64,
    pub clipping_rate: f64,
    /// Calibrated radius r̂ (conformal methods only).
    pub radius: Option<f64>,
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub label: String,
    pub method: String,
    pub model: String,
    /// Conformity scores behind r̂ (conformal methods only).
    pub pool_size: Option<usize>,
    pub coverage: f64,
    pub average_width: f64,
    pub rmse: f64,
    pub clipping_rate: f64,
    pub wall_clock_ms: Option<f64>,
    pub replicates: Vec<ReplicateMetrics>,
}

impl MethodReport {
    pub fn from_replicates(label: String, method: String, model: String, pool_size: Option<usize>, replicates: Vec<ReplicateMetrics>) -> Self {
        let k = replicates.len() as f64;
        let avg = |f: fn(&ReplicateMetrics) -> f64| replicates.iter().map(f).sum::<f64>() / k;
        let wall_clock_ms = replicates
            .iter()
            .map(|r| r.wall_clock_ms)
            .sum::<Option<f64>>()
            .map(|total| total / k);
        Self {
            label,
            method,
            model,
            pool_size,
            coverage: avg(|r| r.coverage),
            average_width: avg(|r| r.average_width),
            rmse: avg(|r| r.rmse),
            clipping_rate: avg(|r| r.clipping_rate),
            wall_clock_ms,
            replicates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub alpha: f64,
    pub seed: u64,
    pub replications: usize,
    pub config_digest: String,
    /// Identifies the test rows scored in every replication.
    pub test_digest: String,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_calibration: usize,
    pub n_test: usize,
    /// Share of zero claim counts in the (first replication's) data.
    pub zero_frequency_fraction: f64,
    pub methods: Vec<MethodReport>,
}

impl Report {
    pub fn method(&self, label: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.label == label)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text table with one row per method.
    pub fn to_table(&self) -> String {
        render_table(std::slice::from_ref(self))
    }
}

/// One table for several reports, one row per (dataset, method).
pub fn render_table(reports: &[Report]) -> String {
    let header = ["Dataset", "Model", "Method", "Coverage", "Avg width", "RMSE", "Clipped", "Time (ms)"];
    let mut rows: Vec<[String; 8]> = Vec::new();
    for r in reports {
        for m in &r.methods {
            rows.push([
                r.name.clone(),
                m.model.clone(),
                m.method.clone(),
                format!("{:.2}%", 100.0 * m.coverage),
                format!("{:.2}", m.average_width),
                format!("{:.2}", m.rmse),
                format!("{:.2}%", 100.0 * m.clipping_rate),
                m.wall_clock_ms.map_or_else(|| "-".to_string(), |t| format!("{t:.1}")),
            ]);
        }
    }
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            // text columns left-aligned, numbers right-aligned
            if i < 3 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "{cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    if let Some(first) = reports.first() {
        let _ = writeln!(
            out,
            "alpha = {}, replications = {}, test rows = {}",
            first.alpha, first.replications, first.n_test
        );
    }
    out
}
