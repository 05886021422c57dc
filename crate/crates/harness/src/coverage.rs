//! Monte Carlo check of the finite-sample coverage band
//! `[1 - α, 1 - α + 1/(m + 1))`, where m is the size of the score pool.

use anyhow::{ensure, Result};
use freqsev::{
    generate, single_stage_locally_weighted, single_stage_split, two_stage_oob, two_stage_split, ClaimsDataset,
    ConformalPredictor, Encoding, ForestConfig, MiscoverageLevel, ModelSpec, OobConfig, SplitIndices, SynthConfig,
    TwoStageModels,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seeds::{derive, stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    /// Single-stage split conformal on the severity.
    SingleStandard,
    /// Single-stage locally weighted split conformal on the severity.
    SingleLocallyWeighted,
    Split,
    Oob,
}

impl CoverageMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::SingleStandard => "single_standard",
            Self::SingleLocallyWeighted => "single_locally_weighted",
            Self::Split => "split",
            Self::Oob => "oob",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub alpha: f64,
    pub replications: usize,
    pub n_train: usize,
    pub n_calibration: usize,
    /// Test units scored per replication.
    pub n_test: usize,
    pub n_trees: usize,
    pub seed: u64,
    pub method: CoverageMethod,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            replications: 1000,
            n_train: 80,
            n_calibration: 20,
            n_test: 1,
            n_trees: 50,
            seed: 0,
            method: CoverageMethod::Split,
        }
    }
}

impl ValidateConfig {
    /// Number of conformity scores behind r̂.
    pub fn pool_size(&self) -> usize {
        match self.method {
            CoverageMethod::Oob => self.n_train + self.n_calibration,
            _ => self.n_calibration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageValidation {
    pub method: CoverageMethod,
    pub alpha: f64,
    pub replications: usize,
    pub trials: usize,
    pub covered: usize,
    pub coverage: f64,
    pub pool_size: usize,
    /// Theoretical band `[1 - α, 1 - α + 1/(m + 1))`.
    pub band: (f64, f64),
    pub std_error: f64,
    /// Band widened by three standard errors.
    pub acceptance: (f64, f64),
    pub pass: bool,
}

impl CoverageValidation {
    pub fn summary(&self) -> String {
        format!(
            "{} coverage {:.4} ({}/{}) vs band [{:.4}, {:.4}) +/- {:.4} (3 s.e.): {}",
            self.method.name(),
            self.coverage,
            self.covered,
            self.trials,
            self.band.0,
            self.band.1,
            3.0 * self.std_error,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Standard error of the mean coverage over `reps` replications, each
/// averaging `n_test` test units that share one calibration.
///
/// Given the calibration, coverage is roughly Beta distributed with variance
/// `α(1 - α)/(m + 2)`; the test units add binomial noise around it.
pub fn coverage_std_error(alpha: f64, pool: usize, n_test: usize, reps: usize) -> f64 {
    let p = 1.0 - alpha;
    let total = p * (1.0 - p);
    let between = (total / (pool as f64 + 2.0)).min(total);
    let per_rep = between + (total - between) / n_test as f64;
    (per_rep / reps as f64).sqrt()
}

/// Band `[1 - α, 1 - α + 1/(m + 1))` widened by `k` standard errors.
pub fn coverage_band(alpha: f64, pool: usize, se: f64, k: f64) -> ((f64, f64), (f64, f64)) {
    let band = (1.0 - alpha, 1.0 - alpha + 1.0 / (pool as f64 + 1.0));
    (band, (band.0 - k * se, band.1 + k * se))
}

fn forest(n_trees: usize, seed: u64) -> ModelSpec {
    ModelSpec::forest(ForestConfig::with_trees(n_trees, seed))
}

fn covered_in(
    p: &ConformalPredictor<f64>,
    encoding: &Encoding,
    ds: &ClaimsDataset<f64>,
    test: &[usize],
) -> Result<usize> {
    let x = encoding.transform(ds, test)?;
    let iv = p.predict_batch(&x)?;
    Ok(test
        .iter()
        .zip(&iv)
        .filter(|(&i, iv)| iv.contains(ds.rows()[i].severity))
        .count())
}

fn one_replication(cfg: &ValidateConfig, rep: usize) -> Result<usize> {
    let rep_seed = derive(cfg.seed, &[rep as u64]);
    let n = cfg.n_train + cfg.n_calibration + cfg.n_test;
    let ds = generate(&SynthConfig::new(n, derive(rep_seed, &[stage::DATA])))?;
    // rows are i.i.d., so a fixed partition is an exchangeable split
    let train: Vec<usize> = (0..cfg.n_train).collect();
    let cal: Vec<usize> = (cfg.n_train..cfg.n_train + cfg.n_calibration).collect();
    let test: Vec<usize> = (cfg.n_train + cfg.n_calibration..n).collect();
    let alpha = MiscoverageLevel::new(cfg.alpha)?;
    let f = forest(cfg.n_trees, derive(rep_seed, &[stage::FREQUENCY]));
    let s = forest(cfg.n_trees, derive(rep_seed, &[stage::SEVERITY]));
    let v = forest(cfg.n_trees, derive(rep_seed, &[stage::VARIABILITY]));
    match cfg.method {
        CoverageMethod::Split => {
            let split = SplitIndices::from_parts(train, cal, test.clone())?;
            let models = TwoStageModels {
                frequency: &f,
                severity: &s,
                variability: &v,
            };
            let p = two_stage_split(&ds, &split, &models, alpha)?;
            covered_in(&p, p.encoding().expect("encoding"), &ds, &test)
        }
        CoverageMethod::Oob => {
            let rows: Vec<usize> = (0..cfg.n_train + cfg.n_calibration).collect();
            let config = OobConfig::uniform(ForestConfig::with_trees(cfg.n_trees, derive(rep_seed, &[stage::SEVERITY])));
            let p = two_stage_oob(&ds, &rows, &config, alpha)?;
            covered_in(&p, p.encoding().expect("encoding"), &ds, &test)
        }
        CoverageMethod::SingleStandard | CoverageMethod::SingleLocallyWeighted => {
            let encoding = Encoding::fit(&ds, &train)?;
            let xt = encoding.transform(&ds, &train)?;
            let xc = encoding.transform(&ds, &cal)?;
            let y = ds.severities();
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let yc: Vec<f64> = cal.iter().map(|&i| y[i]).collect();
            let p = if cfg.method == CoverageMethod::SingleStandard {
                single_stage_split((&xt, &yt), (&xc, &yc), &s, alpha)?
            } else {
                single_stage_locally_weighted((&xt, &yt), (&xc, &yc), &s, &v, alpha)?
            };
            covered_in(&p, &encoding, &ds, &test)
        }
    }
}

pub fn validate_coverage(cfg: &ValidateConfig) -> Result<CoverageValidation> {
    ensure!(cfg.alpha > 0.0 && cfg.alpha < 1.0, "alpha must lie in (0, 1)");
    ensure!(cfg.replications > 0, "replications must be at least 1");
    ensure!(cfg.n_test > 0, "n_test must be at least 1");
    ensure!(cfg.n_train > 0 && cfg.n_calibration > 0, "training and calibration sizes must be positive");
    ensure!(cfg.n_trees > 0, "n_trees must be at least 1");
    let counts: Vec<usize> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| one_replication(cfg, rep))
        .collect::<Result<_>>()?;
    let covered: usize = counts.iter().sum();
    let trials = cfg.replications * cfg.n_test;
    let coverage = covered as f64 / trials as f64;
    let pool = cfg.pool_size();
    let se = coverage_std_error(cfg.alpha, pool, cfg.n_test, cfg.replications);
    let (band, acceptance) = coverage_band(cfg.alpha, pool, se, 3.0);
    Ok(CoverageValidation {
        method: cfg.method,
        alpha: cfg.alpha,
        replications: cfg.replications,
        trials,
        covered,
        coverage,
        pool_size: pool,
        band,
        std_error: se,
        acceptance,
        pass: coverage >= acceptance.0 && coverage < acceptance.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_error_single_test_point_is_binomial() {
        let se = coverage_std_error(0.2, 20, 1, 1000);
        assert!((se - (0.16f64 / 1000.0).sqrt()).abs() < 1e-15);
        assert!(coverage_std_error(0.2, 20, 10, 1000) < se);
        let (band, acc) = coverage_band(0.2, 20, se, 3.0);
        assert!((band.1 - (0.8 + 1.0 / 21.0)).abs() < 1e-12);
        assert!((acc.0 - (0.8 - 3.0 * se)).abs() < 1e-12);
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = ValidateConfig {
            replications: 20,
            n_trees: 10,
            ..ValidateConfig::default()
        };
        assert_eq!(validate_coverage(&cfg).unwrap(), validate_coverage(&cfg).unwrap());
    }
}
