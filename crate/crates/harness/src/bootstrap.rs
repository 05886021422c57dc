//! Parametric bootstrap baseline.
//!
//! The frequency model and a gamma severity GLM are fitted on the training
//! rows (the GLM on positive-count rows, with the observed count as a
//! feature). For a test unit the predictive distribution is
//! `Gamma(shape = 1/φ, scale = μ φ)` with `μ = ψ̂(x, μ̂(x))` and Pearson
//! dispersion φ; the interval runs between the empirical α/2 and 1 − α/2
//! quantiles of `n_boot` draws from it.

use anyhow::{bail, Context, Result};
use freqsev::conformal::FREQUENCY_FEATURE;
use freqsev::{
    fit_glm, ClaimsDataset, Encoding, GlmConfig, GlmFamily, GlmModel, MiscoverageLevel, ModelFactory, ModelSpec,
    PredictionInterval, Regressor, SplitIndices,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub seed: u64,
    pub frequency: ModelSpec,
    pub glm: GlmConfig,
}

#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    /// Intervals for `split.test()`, in order.
    pub intervals: Vec<PredictionInterval<f64>>,
    pub severity_model: GlmModel<f64>,
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap_baseline(
    dataset: &ClaimsDataset<f64>,
    split: &SplitIndices,
    alpha: MiscoverageLevel,
    config: &BootstrapConfig,
) -> Result<BootstrapOutcome> {
    if config.n_boot < 2 {
        bail!("insufficient bootstrap draws: n_boot = {} (need at least 2)", config.n_boot);
    }
    let train = split.train();
    let encoding = Encoding::fit(dataset, train)?;
    let x1 = encoding.transform(dataset, train)?;
    let d1: Vec<f64> = train.iter().map(|&i| dataset.rows()[i].frequency as f64).collect();
    let mu = config.frequency.fit(&x1, &d1).context("fitting the frequency model")?;

    let positive: Vec<usize> = (0..train.len()).filter(|&k| d1[k] > 0.0).collect();
    if positive.is_empty() {
        bail!("no positive-frequency training rows");
    }
    let d_pos: Vec<f64> = positive.iter().map(|&k| d1[k]).collect();
    let z_pos = x1.select_rows(&positive).with_column(FREQUENCY_FEATURE, &d_pos)?;
    let y_pos: Vec<f64> = positive
        .iter()
        .map(|&k| dataset.rows()[train[k]].severity.max(1e-8))
        .collect();
    let glm = fit_glm(&z_pos, &y_pos, GlmFamily::Gamma, &config.glm).context("fitting the gamma severity GLM")?;
    let phi = glm.dispersion;
    if !(phi > 0.0 && phi.is_finite()) {
        bail!("gamma dispersion estimate is not positive ({phi})");
    }

    let test = split.test();
    let x_test = encoding.transform(dataset, test)?;
    let d_hat = mu.predict_matrix(&x_test)?;
    let z_test = x_test.with_column(FREQUENCY_FEATURE, &d_hat)?;
    let a = alpha.alpha();
    let intervals = (0..test.len())
        .into_par_iter()
        .map(|k| {
            let mean = glm.predict_unchecked(z_test.row(k));
            let dist = Gamma::new(1.0 / phi, mean * phi).map_err(|e| anyhow::anyhow!("gamma predictive: {e}"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let mut draws: Vec<f64> = (0..config.n_boot).map(|_| dist.sample(&mut rng)).collect();
            draws.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&draws, a / 2.0);
            let hi = quantile_sorted(&draws, 1.0 - a / 2.0);
            Ok(PredictionInterval {
                lo,
                hi,
                center: mean,
                half_width_raw: (hi - lo) / 2.0,
                clipped_at_zero: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapOutcome {
        intervals,
        severity_model: glm,
    })
}
