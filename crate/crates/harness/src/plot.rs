//! Data behind interval plots for the first test units, written as CSV with
//! a JSON summary next to it. Nothing is rendered.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::report::{MethodReport, Report};
use crate::run::{PlotSeries, RunOutput};

#[derive(Serialize)]
struct PlotSummary<'a> {
    name: &'a str,
    alpha: f64,
    seed: u64,
    config_digest: &'a str,
    test_digest: &'a str,
    sample_size: usize,
    method: Option<&'a MethodReport>,
}

/// Writes `row_id,lo,hi,center,truth` for the first `sample_size` test
/// units to `path`, and the method's metrics to `path` with a `.json`
/// extension.
pub fn emit_plot_data(report: &Report, series: &PlotSeries, sample_size: usize, path: &Path) -> Result<()> {
    if sample_size > series.intervals.len() {
        bail!(
            "sample size {sample_size} exceeds the {} test units",
            series.intervals.len()
        );
    }
    let mut csv = String::from("row_id,lo,hi,center,truth\n");
    for k in 0..sample_size {
        let iv = &series.intervals[k];
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            series.row_ids[k], iv.lo, iv.hi, iv.center, series.truths[k]
        ));
    }
    fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;

    let summary = PlotSummary {
        name: &report.name,
        alpha: report.alpha,
        seed: report.seed,
        config_digest: &report.config_digest,
        test_digest: &report.test_digest,
        sample_size,
        method: report.method(&series.label),
    };
    let json_path = path.with_extension("json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    Ok(())
}

/// Writes `report.json`, `report.txt` and one plot-data pair per method.
pub fn write_outputs(output: &RunOutput, dir: &Path, plot_sample: usize) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("report.json"), output.report.to_json()?)?;
    let mut txt = fs::File::create(dir.join("report.txt"))?;
    txt.write_all(output.report.to_table().as_bytes())?;
    for series in &output.series {
        let n = plot_sample.min(series.intervals.len());
        emit_plot_data(&output.report, series, n, &dir.join(format!("{}_intervals.csv", series.label)))?;
    }
    Ok(())
}
