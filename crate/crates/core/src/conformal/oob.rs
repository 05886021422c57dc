use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    absolute_residuals, variability_floor, ConformalPredictor, Mode, OobForests, Parts, TwoStageScore,
    FREQUENCY_FEATURE,
};
use crate::data::ClaimsDataset;
use crate::error::{Error, Result};
use crate::ingest::Encoding;
use crate::models::{fit_forest, FeatureMatrix, Forest, ForestConfig, Regressor};
use crate::scalar::Scalar;
use crate::score::{MiscoverageLevel, ScoreProvenance, ScoreSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OobConfig {
    pub frequency: ForestConfig,
    pub severity: ForestConfig,
    pub variability: ForestConfig,
    /// Train ψ̂ and σ̂ only on rows with a positive observed count. Rows left
    /// out are scored with the full forests.
    pub oob_positive_only: bool,
}

impl Default for OobConfig {
    fn default() -> Self {
        Self::uniform(ForestConfig::default())
    }
}

impl OobConfig {
    /// The same forest settings for all three stages, with distinct seeds.
    pub fn uniform(forest: ForestConfig) -> Self {
        let seed = forest.seed;
        Self {
            frequency: forest.clone(),
            severity: ForestConfig {
                seed: seed.wrapping_add(1),
                ..forest.clone()
            },
            variability: ForestConfig {
                seed: seed.wrapping_add(2),
                ..forest
            },
            oob_positive_only: false,
        }
    }
}

/// Out-of-bag predictions for the rows a forest was trained on, and full
/// forest predictions for the remaining rows of `x`.
fn oob_or_full<T: Scalar>(
    forest: &Forest<T>,
    x: &FeatureMatrix<T>,
    trained: &[usize],
    rows: &[usize],
    name: &'static str,
) -> Result<Vec<T>> {
    let trained_x = x.select_rows(trained);
    let oob = forest.oob_predict_all(&trained_x).map_err(|e| match e {
        Error::NoOobTrees { row, .. } => Error::NoOobTrees {
            row: rows[trained[row]],
            forest: name,
        },
        other => other,
    })?;
    if trained.len() == x.n_rows() {
        return Ok(oob);
    }
    let mut out: Vec<T> = forest.predict_matrix(x)?;
    for (k, &pos) in trained.iter().enumerate() {
        out[pos] = oob[k];
    }
    Ok(out)
}

/// Two-stage out-of-bag conformal prediction on the training rows `rows`.
///
/// All three stages are random forests trained on every row; conformity
/// scores come from out-of-bag predictions, so no calibration split is
/// needed and the score pool has size n.
pub fn two_stage_oob<T: Scalar>(
    dataset: &ClaimsDataset<T>,
    rows: &[usize],
    config: &OobConfig,
    alpha: MiscoverageLevel,
) -> Result<ConformalPredictor<T>> {
    if rows.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let encoding = Encoding::fit(dataset, rows)?;
    let x = encoding.transform(dataset, rows)?;
    let d: Vec<T> = rows.iter().map(|&i| T::of(dataset.rows()[i].frequency as f64)).collect();
    let y: Vec<T> = rows.iter().map(|&i| dataset.rows()[i].severity).collect();
    let all: Vec<usize> = (0..rows.len()).collect();

    let mu = Arc::new(fit_forest(&x, &d, &config.frequency)?);
    let d_hat = oob_or_full(&mu, &x, &all, rows, "frequency")?;
    let z = x.with_column(FREQUENCY_FEATURE, &d_hat)?;

    let second: Vec<usize> = if config.oob_positive_only {
        all.iter().copied().filter(|&k| d[k] > T::zero()).collect()
    } else {
        all.clone()
    };
    if second.is_empty() {
        return Err(Error::NoPositiveFrequencyRows);
    }
    let z_second = z.select_rows(&second);
    let y_second: Vec<T> = second.iter().map(|&k| y[k]).collect();
    let psi = Arc::new(fit_forest(&z_second, &y_second, &config.severity)?);
    let centers = oob_or_full(&psi, &z, &second, rows, "severity")?;
    let deltas = absolute_residuals(&y, &centers);
    let floor = variability_floor(&deltas);

    let delta_second: Vec<T> = second.iter().map(|&k| deltas[k]).collect();
    let sigma = Arc::new(fit_forest(&z_second, &delta_second, &config.variability)?);
    let scales = oob_or_full(&sigma, &z, &second, rows, "variability")?;

    let audit: Vec<TwoStageScore<T>> = (0..rows.len())
        .map(|k| {
            let denominator = scales[k].max(floor);
            TwoStageScore {
                index: rows[k],
                score: deltas[k] / denominator,
                numerator: deltas[k],
                denominator,
            }
        })
        .collect();
    let scores = ScoreSet::new(audit.iter().map(|s| s.score).collect(), ScoreProvenance::OutOfBag)?;
    let frequency_model: Arc<dyn Regressor<T>> = mu.clone();
    let point_model: Arc<dyn Regressor<T>> = psi.clone();
    let variability_model: Arc<dyn Regressor<T>> = sigma.clone();
    ConformalPredictor::assemble(Parts {
        mode: Mode::TwoStageOob,
        alpha,
        frequency_model: Some(frequency_model),
        point_model,
        variability_model: Some(variability_model),
        scores,
        variability_floor: floor,
        encoding: Some(encoding),
        audit,
        oob_forests: Some(OobForests {
            frequency: mu,
            severity: psi,
            variability: sigma,
            rows: rows.to_vec(),
            second_stage_rows: second,
        }),
    })
}
