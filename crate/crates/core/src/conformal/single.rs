use super::{absolute_residuals, positive_if_needed, variability_floor, ConformalPredictor, Mode, Parts};
use crate::error::{Error, Result};
use crate::models::{FeatureMatrix, ModelFactory};
use crate::scalar::Scalar;
use crate::score::{MiscoverageLevel, ScoreProvenance, ScoreSet};

fn check_pair<T: Scalar>(x: &FeatureMatrix<T>, y: &[T], what: &'static str) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty(what));
    }
    Ok(())
}

/// Split conformal with scores `|y - μ̂(x)|`; every interval is `μ̂(x) ± r̂`.
pub fn single_stage_split<T, F>(
    train: (&FeatureMatrix<T>, &[T]),
    cal: (&FeatureMatrix<T>, &[T]),
    model: &F,
    alpha: MiscoverageLevel,
) -> Result<ConformalPredictor<T>>
where
    T: Scalar,
    F: ModelFactory<T> + ?Sized,
{
    check_pair(train.0, train.1, "training set")?;
    check_pair(cal.0, cal.1, "calibration set")?;
    let mu = model.fit(train.0, &positive_if_needed(train.1, model.positive_response()))?;
    let fitted = mu.predict_matrix(cal.0)?;
    let scores = ScoreSet::new(absolute_residuals(cal.1, &fitted), ScoreProvenance::Calibration)?;
    ConformalPredictor::assemble(Parts {
        mode: Mode::SingleStandard,
        alpha,
        frequency_model: None,
        point_model: mu,
        variability_model: None,
        scores,
        variability_floor: T::zero(),
        encoding: None,
        audit: Vec::new(),
        oob_forests: None,
    })
}

/// Locally weighted split conformal: σ̂ is fitted on the training absolute
/// residuals, scores are `|y - μ̂(x)| / σ̂(x)` and intervals `μ̂(x) ± r̂ σ̂(x)`.
pub fn single_stage_locally_weighted<T, F, G>(
    train: (&FeatureMatrix<T>, &[T]),
    cal: (&FeatureMatrix<T>, &[T]),
    model: &F,
    variability: &G,
    alpha: MiscoverageLevel,
) -> Result<ConformalPredictor<T>>
where
    T: Scalar,
    F: ModelFactory<T> + ?Sized,
    G: ModelFactory<T> + ?Sized,
{
    check_pair(train.0, train.1, "training set")?;
    check_pair(cal.0, cal.1, "calibration set")?;
    let mu = model.fit(train.0, &positive_if_needed(train.1, model.positive_response()))?;
    let deltas = absolute_residuals(train.1, &mu.predict_matrix(train.0)?);
    let floor = variability_floor(&deltas);
    let sigma = variability.fit(train.0, &positive_if_needed(&deltas, variability.positive_response()))?;

    let centers = mu.predict_matrix(cal.0)?;
    let scales = sigma.predict_matrix(cal.0)?;
    let scores: Vec<T> = cal
        .1
        .iter()
        .zip(centers.iter().zip(&scales))
        .map(|(&y, (&c, &s))| (y - c).abs() / s.max(floor))
        .collect();
    ConformalPredictor::assemble(Parts {
        mode: Mode::SingleLocallyWeighted,
        alpha,
        frequency_model: None,
        point_model: mu,
        variability_model: Some(sigma),
        scores: ScoreSet::new(scores, ScoreProvenance::Calibration)?,
        variability_floor: floor,
        encoding: None,
        audit: Vec::new(),
        oob_forests: None,
    })
}
