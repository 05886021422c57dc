//! Runs an experiment: split, fit, calibrate, predict on the test rows and
//! summarize.

use std::time::Instant;

use anyhow::{Context, Result};
use freqsev::{
    average_width, clipping_rate, empirical_coverage, generate, load_csv, random_split, rmse, two_stage_oob,
    two_stage_split, ClaimsDataset, ConformalPredictor, ForestConfig, GlmConfig, MiscoverageLevel, ModelSpec,
    OobConfig, PredictionInterval, SchemaConfig, SplitIndices, SynthConfig, TwoStageModels,
};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bootstrap::{bootstrap_baseline, BootstrapConfig};
use crate::config::{hex, DataSource, ExperimentConfig, MethodSpec};
use crate::presets;
use crate::report::{MethodReport, ReplicateMetrics, Report};
use crate::seeds::{derive, stage};
use crate::surrogate;

/// Intervals of one method on the test rows of one replication.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    /// Dataset row index of each test unit.
    pub row_ids: Vec<usize>,
    pub intervals: Vec<PredictionInterval<f64>>,
    pub truths: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    /// First replication, one entry per method.
    pub series: Vec<PlotSeries>,
}

struct MethodOutcome {
    metrics: ReplicateMetrics,
    pool_size: Option<usize>,
    series: PlotSeries,
}

struct Replication {
    n_rows: usize,
    split: SplitIndices,
    zero_fraction: f64,
    methods: Vec<MethodOutcome>,
}

/// Reads the dataset of a CSV source; other sources are generated per replication.
pub fn load_source(source: &DataSource) -> Result<Option<ClaimsDataset<f64>>> {
    let DataSource::Csv { path, schema } = source else {
        return Ok(None);
    };
    let schema = match presets::schema(schema) {
        Some(text) => SchemaConfig::from_toml_str(text)?,
        None => SchemaConfig::from_path(schema).with_context(|| format!("reading schema `{schema}`"))?,
    };
    let ds = load_csv(path, &schema).with_context(|| format!("loading {}", path.display()))?;
    Ok(Some(ds))
}

pub fn dataset_for(source: &DataSource, preloaded: Option<&ClaimsDataset<f64>>, seed: u64) -> Result<ClaimsDataset<f64>> {
    Ok(match source {
        DataSource::Synthetic { n, p_zero_mixture } => generate(&SynthConfig {
            n: *n,
            seed,
            p_zero_mixture: *p_zero_mixture,
        })?,
        DataSource::Surrogate { kind, n } => surrogate::surrogate(*kind, *n, seed)?,
        DataSource::GammaSimulation { n } => surrogate::gamma_simulation(*n, seed)?,
        DataSource::Csv { .. } => preloaded.expect("CSV data loaded up front").clone(),
    })
}

fn seeded(spec: &ModelSpec, rep_seed: u64, stage: u64) -> ModelSpec {
    match spec {
        ModelSpec::Forest(f) => spec.with_seed(derive(rep_seed, &[stage, f.seed])),
        other => other.clone(),
    }
}

fn seeded_forest(f: &ForestConfig, rep_seed: u64, stage: u64) -> ForestConfig {
    ForestConfig {
        seed: derive(rep_seed, &[stage, f.seed]),
        ..f.clone()
    }
}

fn conformal_intervals(
    predictor: &ConformalPredictor<f64>,
    dataset: &ClaimsDataset<f64>,
    rows: &[usize],
) -> Result<Vec<PredictionInterval<f64>>> {
    let encoding = predictor.encoding().expect("two-stage predictors carry their encoding");
    let x = encoding.transform(dataset, rows)?;
    Ok(predictor.predict_batch(&x)?)
}

fn evaluate(
    method: &MethodSpec,
    dataset: &ClaimsDataset<f64>,
    split: &SplitIndices,
    alpha: MiscoverageLevel,
    rep_seed: u64,
    timing: bool,
) -> Result<MethodOutcome> {
    let start = Instant::now();
    let test = split.test();
    let (intervals, radius, pool_size) = match method {
        MethodSpec::Split {
            frequency,
            severity,
            variability,
            ..
        } => {
            let f = seeded(frequency, rep_seed, stage::FREQUENCY);
            let s = seeded(severity, rep_seed, stage::SEVERITY);
            let v = seeded(variability, rep_seed, stage::VARIABILITY);
            let models = TwoStageModels {
                frequency: &f,
                severity: &s,
                variability: &v,
            };
            let p = two_stage_split(dataset, split, &models, alpha)?;
            let iv = conformal_intervals(&p, dataset, test)?;
            (iv, Some(p.calibrated_quantile()), Some(p.scores().len()))
        }
        MethodSpec::Oob {
            forest,
            oob_positive_only,
            ..
        } => {
            let config = OobConfig {
                frequency: seeded_forest(forest, rep_seed, stage::FREQUENCY),
                severity: seeded_forest(forest, rep_seed, stage::SEVERITY),
                variability: seeded_forest(forest, rep_seed, stage::VARIABILITY),
                oob_positive_only: *oob_positive_only,
            };
            let rows = split.train_and_calibration();
            let p = two_stage_oob(dataset, &rows, &config, alpha)?;
            let iv = conformal_intervals(&p, dataset, test)?;
            (iv, Some(p.calibrated_quantile()), Some(p.scores().len()))
        }
        MethodSpec::Bootstrap { frequency, n_boot, .. } => {
            let config = BootstrapConfig {
                n_boot: *n_boot,
                seed: derive(rep_seed, &[stage::BOOTSTRAP]),
                frequency: seeded(frequency, rep_seed, stage::FREQUENCY),
                glm: GlmConfig::default(),
            };
            (bootstrap_baseline(dataset, split, alpha, &config)?.intervals, None, None)
        }
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let truths: Vec<f64> = test.iter().map(|&i| dataset.rows()[i].severity).collect();
    let centers: Vec<f64> = intervals.iter().map(|i| i.center).collect();
    let metrics = ReplicateMetrics {
        coverage: empirical_coverage(&intervals, &truths)?,
        average_width: average_width(&intervals)?,
        rmse: rmse(&centers, &truths)?,
        clipping_rate: clipping_rate(&intervals)?,
        radius,
        wall_clock_ms: timing.then_some(elapsed),
    };
    Ok(MethodOutcome {
        metrics,
        pool_size,
        series: PlotSeries {
            label: method.label(),
            row_ids: test.to_vec(),
            intervals,
            truths,
        },
    })
}

fn replication(config: &ExperimentConfig, preloaded: Option<&ClaimsDataset<f64>>, rep: usize) -> Result<Replication> {
    let rep_seed = derive(config.seed, &[rep as u64]);
    let dataset = dataset_for(&config.data, preloaded, derive(rep_seed, &[stage::DATA]))?;
    let split = random_split(dataset.len(), config.split.proportions, derive(rep_seed, &[stage::SPLIT]))?;
    let alpha = MiscoverageLevel::new(config.alpha)?;
    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            evaluate(m, &dataset, &split, alpha, rep_seed, config.record_timing)
                .with_context(|| format!("replication {rep}, method {i} (`{}`)", m.label()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Replication {
        n_rows: dataset.len(),
        zero_fraction: dataset.zero_frequency_fraction(),
        split,
        methods,
    })
}

fn test_digest(config: &ExperimentConfig, reps: &[Replication]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&config.data).expect("data source serializes").as_bytes());
    h.update(config.seed.to_le_bytes());
    for rep in reps {
        h.update((rep.split.test().len() as u64).to_le_bytes());
        for &i in rep.split.test() {
            h.update((i as u64).to_le_bytes());
        }
    }
    hex(&h.finalize())
}

/// Runs every replication (in parallel) and assembles the report.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let preloaded = load_source(&config.data)?;
    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|rep| replication(config, preloaded.as_ref(), rep))
        .collect::<Result<_>>()?;

    let first = &reps[0];
    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            MethodReport::from_replicates(
                m.label(),
                m.method_name().to_string(),
                m.model_name().to_string(),
                first.methods[k].pool_size,
                reps.iter().map(|r| r.methods[k].metrics.clone()).collect(),
            )
        })
        .collect();
    let report = Report {
        name: config.name.clone(),
        alpha: config.alpha,
        seed: config.seed,
        replications: config.replications,
        config_digest: config.digest(),
        test_digest: test_digest(config, &reps),
        n_rows: first.n_rows,
        n_train: first.split.train().len(),
        n_calibration: first.split.calibration().len(),
        n_test: first.split.test().len(),
        zero_frequency_fraction: first.zero_fraction,
        methods,
    };
    let series = reps
        .into_iter()
        .next()
        .expect("at least one replication")
        .methods
        .into_iter()
        .map(|m| m.series)
        .collect();
    Ok(RunOutput { report, series })
}
