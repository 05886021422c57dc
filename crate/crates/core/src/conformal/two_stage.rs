use super::{
    absolute_residuals, positive_if_needed, variability_floor, ConformalPredictor, Mode, Parts, TwoStageScore,
    FREQUENCY_FEATURE,
};
use crate::data::ClaimsDataset;
use crate::error::{Error, Result};
use crate::ingest::Encoding;
use crate::models::ModelFactory;
use crate::scalar::Scalar;
use crate::score::{MiscoverageLevel, ScoreProvenance, ScoreSet};
use crate::split::SplitIndices;

/// Model choices for the frequency (μ̂), severity (ψ̂) and variability (σ̂) stages.
pub struct TwoStageModels<'a, T: Scalar> {
    pub frequency: &'a dyn ModelFactory<T>,
    pub severity: &'a dyn ModelFactory<T>,
    pub variability: &'a dyn ModelFactory<T>,
}

/// Two-stage split conformal prediction.
///
/// μ̂ is fitted on the training rows. ψ̂ and σ̂ are fitted on the
/// positive-frequency training rows with the observed count appended as a
/// feature. Calibration scores use every calibration row, including zero
/// claims, with μ̂(x) in place of the observed count:
/// `r = |y - ψ̂(x, μ̂(x))| / σ̂(x, μ̂(x))`.
pub fn two_stage_split<T: Scalar>(
    dataset: &ClaimsDataset<T>,
    split: &SplitIndices,
    models: &TwoStageModels<'_, T>,
    alpha: MiscoverageLevel,
) -> Result<ConformalPredictor<T>> {
    if split.calibration().is_empty() {
        return Err(Error::Empty("calibration set"));
    }
    let train = split.train();
    let encoding = Encoding::fit(dataset, train)?;
    let x1 = encoding.transform(dataset, train)?;
    let d1: Vec<T> = train.iter().map(|&i| T::of(dataset.rows()[i].frequency as f64)).collect();
    let mu = models.frequency.fit(&x1, &d1)?;

    let positive: Vec<usize> = (0..train.len()).filter(|&k| d1[k] > T::zero()).collect();
    if positive.is_empty() {
        return Err(Error::NoPositiveFrequencyRows);
    }
    let d_pos: Vec<T> = positive.iter().map(|&k| d1[k]).collect();
    let z_pos = x1.select_rows(&positive).with_column(FREQUENCY_FEATURE, &d_pos)?;
    let y_pos: Vec<T> = positive.iter().map(|&k| dataset.rows()[train[k]].severity).collect();
    let psi = models
        .severity
        .fit(&z_pos, &positive_if_needed(&y_pos, models.severity.positive_response()))?;
    let deltas = absolute_residuals(&y_pos, &psi.predict_matrix(&z_pos)?);
    let floor = variability_floor(&deltas);
    let sigma = models
        .variability
        .fit(&z_pos, &positive_if_needed(&deltas, models.variability.positive_response()))?;

    let cal = split.calibration();
    let x2 = encoding.transform(dataset, cal)?;
    let d_hat = mu.predict_matrix(&x2)?;
    let z2 = x2.with_column(FREQUENCY_FEATURE, &d_hat)?;
    let centers = psi.predict_matrix(&z2)?;
    let scales = sigma.predict_matrix(&z2)?;
    let audit: Vec<TwoStageScore<T>> = cal
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let numerator = (dataset.rows()[i].severity - centers[k]).abs();
            let denominator = scales[k].max(floor);
            TwoStageScore {
                index: i,
                score: numerator / denominator,
                numerator,
                denominator,
            }
        })
        .collect();
    let scores = ScoreSet::new(audit.iter().map(|s| s.score).collect(), ScoreProvenance::Calibration)?;
    ConformalPredictor::assemble(Parts {
        mode: Mode::TwoStageSplit,
        alpha,
        frequency_model: Some(mu),
        point_model: psi,
        variability_model: Some(sigma),
        scores,
        variability_floor: floor,
        encoding: Some(encoding),
        audit,
        oob_forests: None,
    })
}
