//! Conformal predictors: single-stage split (plain and locally weighted),
//! two-stage split and two-stage out-of-bag.
//!
//! Every procedure ends in a frozen [`ConformalPredictor`] holding the fitted
//! models, the conformity scores and the calibrated radius r̂. Scores are
//! ranked as a multiset, so ties are allowed; the resulting intervals are
//! then conservative.

mod oob;
mod single;
mod two_stage;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ClaimRecord;
use crate::error::{Error, Result};
use crate::ingest::Encoding;
use crate::interval::PredictionInterval;
use crate::models::{FeatureMatrix, Forest, Regressor};
use crate::scalar::{mean, Scalar};
use crate::score::{conformal_quantile, MiscoverageLevel, ScoreSet};

pub use oob::{two_stage_oob, OobConfig};
pub use single::{single_stage_locally_weighted, single_stage_split};
pub use two_stage::{two_stage_split, TwoStageModels};

/// Name of the appended claim-count feature seen by the second stage.
pub const FREQUENCY_FEATURE: &str = "frequency";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SingleStandard,
    SingleLocallyWeighted,
    TwoStageSplit,
    TwoStageOob,
}

impl Mode {
    pub fn is_two_stage(self) -> bool {
        matches!(self, Self::TwoStageSplit | Self::TwoStageOob)
    }
}

/// One calibration (or out-of-bag) score with its parts kept for audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageScore<T> {
    /// Row index in the source dataset.
    pub index: usize,
    pub score: T,
    /// `|y - center|`.
    pub numerator: T,
    /// Floored variability prediction.
    pub denominator: T,
}

/// The three forests behind an out-of-bag predictor.
#[derive(Debug, Clone)]
pub struct OobForests<T> {
    pub frequency: Arc<Forest<T>>,
    pub severity: Arc<Forest<T>>,
    pub variability: Arc<Forest<T>>,
    /// Training rows (dataset indices) in forest row order.
    pub rows: Vec<usize>,
    /// Rows the severity and variability forests were trained on, as
    /// positions into `rows`.
    pub second_stage_rows: Vec<usize>,
}

#[derive(Clone)]
pub struct ConformalPredictor<T: Scalar> {
    mode: Mode,
    alpha: MiscoverageLevel,
    frequency_model: Option<Arc<dyn Regressor<T>>>,
    point_model: Arc<dyn Regressor<T>>,
    variability_model: Option<Arc<dyn Regressor<T>>>,
    scores: ScoreSet<T>,
    calibrated_quantile: T,
    variability_floor: T,
    encoding: Option<Encoding>,
    audit: Vec<TwoStageScore<T>>,
    oob_forests: Option<OobForests<T>>,
}

impl<T: Scalar> fmt::Debug for ConformalPredictor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalPredictor")
            .field("mode", &self.mode)
            .field("alpha", &self.alpha.alpha())
            .field("n_scores", &self.scores.len())
            .field("calibrated_quantile", &self.calibrated_quantile)
            .field("variability_floor", &self.variability_floor)
            .finish()
    }
}

/// Lower bound applied to variability predictions: `max(1e-8, 1e-6 * mean(δ))`.
pub fn variability_floor<T: Scalar>(deltas: &[T]) -> T {
    let scale = mean(deltas).unwrap_or_else(T::zero) * T::of(1e-6);
    scale.max(T::of(1e-8))
}

struct Parts<T: Scalar> {
    mode: Mode,
    alpha: MiscoverageLevel,
    frequency_model: Option<Arc<dyn Regressor<T>>>,
    point_model: Arc<dyn Regressor<T>>,
    variability_model: Option<Arc<dyn Regressor<T>>>,
    scores: ScoreSet<T>,
    variability_floor: T,
    encoding: Option<Encoding>,
    audit: Vec<TwoStageScore<T>>,
    oob_forests: Option<OobForests<T>>,
}

impl<T: Scalar> ConformalPredictor<T> {
    fn assemble(parts: Parts<T>) -> Result<Self> {
        let calibrated_quantile = conformal_quantile(&parts.scores, parts.alpha)?;
        Ok(Self {
            mode: parts.mode,
            alpha: parts.alpha,
            frequency_model: parts.frequency_model,
            point_model: parts.point_model,
            variability_model: parts.variability_model,
            scores: parts.scores,
            calibrated_quantile,
            variability_floor: parts.variability_floor,
            encoding: parts.encoding,
            audit: parts.audit,
            oob_forests: parts.oob_forests,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn alpha(&self) -> MiscoverageLevel {
        self.alpha
    }

    /// The calibrated radius r̂.
    pub fn calibrated_quantile(&self) -> T {
        self.calibrated_quantile
    }

    pub fn scores(&self) -> &ScoreSet<T> {
        &self.scores
    }

    pub fn variability_floor(&self) -> T {
        self.variability_floor
    }

    pub fn frequency_model(&self) -> Option<&Arc<dyn Regressor<T>>> {
        self.frequency_model.as_ref()
    }

    /// μ̂ for single-stage modes, ψ̂ for two-stage modes.
    pub fn point_model(&self) -> &Arc<dyn Regressor<T>> {
        &self.point_model
    }

    pub fn variability_model(&self) -> Option<&Arc<dyn Regressor<T>>> {
        self.variability_model.as_ref()
    }

    /// Encoding applied by [`ConformalPredictor::predict_record`]; present for
    /// two-stage predictors built from a claims dataset.
    pub fn encoding(&self) -> Option<&Encoding> {
        self.encoding.as_ref()
    }

    /// Per-score breakdown (two-stage modes only).
    pub fn audit(&self) -> &[TwoStageScore<T>] {
        &self.audit
    }

    pub fn oob_forests(&self) -> Option<&OobForests<T>> {
        self.oob_forests.as_ref()
    }

    /// Number of features expected by [`ConformalPredictor::predict_interval`].
    pub fn n_features(&self) -> usize {
        match &self.frequency_model {
            Some(m) => m.n_features(),
            None => self.point_model.n_features(),
        }
    }

    /// Same models and scores, recalibrated at another miscoverage level.
    pub fn with_alpha(&self, alpha: MiscoverageLevel) -> Result<Self> {
        let mut out = self.clone();
        out.calibrated_quantile = conformal_quantile(&self.scores, alpha)?;
        out.alpha = alpha;
        Ok(out)
    }

    fn scale(&self, z: &[T]) -> T {
        match &self.variability_model {
            Some(m) => m.predict_unchecked(z).max(self.variability_floor),
            None => T::one(),
        }
    }

    fn interval_unchecked(&self, x: &[T]) -> PredictionInterval<T> {
        match &self.frequency_model {
            Some(freq) => {
                let mut z = Vec::with_capacity(x.len() + 1);
                z.extend_from_slice(x);
                z.push(freq.predict_unchecked(x));
                let center = self.point_model.predict_unchecked(&z);
                let eps = self.calibrated_quantile * self.scale(&z);
                PredictionInterval::clipped(center, eps)
            }
            None => {
                let center = self.point_model.predict_unchecked(x);
                let eps = self.calibrated_quantile * self.scale(x);
                PredictionInterval::symmetric(center, eps)
            }
        }
    }

    /// Interval for an encoded feature row (without the frequency column).
    pub fn predict_interval(&self, x: &[T]) -> Result<PredictionInterval<T>> {
        if x.len() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.interval_unchecked(x))
    }

    /// Intervals for every row of `x`, computed in parallel.
    pub fn predict_batch(&self, x: &FeatureMatrix<T>) -> Result<Vec<PredictionInterval<T>>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                got: x.n_cols(),
            });
        }
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.interval_unchecked(x.row(i)))
            .collect())
    }

    /// Interval for a raw claims record, encoded with the frozen encoding.
    pub fn predict_record(&self, record: &ClaimRecord<T>) -> Result<PredictionInterval<T>> {
        let encoding = self
            .encoding
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("predictor has no record encoding".into()))?;
        self.predict_interval(&encoding.transform_record(record)?)
    }
}

pub(crate) fn absolute_residuals<T: Scalar>(y: &[T], fitted: &[T]) -> Vec<T> {
    y.iter().zip(fitted).map(|(&a, &b)| (a - b).abs()).collect()
}

/// Clamps targets at 1e-8 for factories that need positive responses.
pub(crate) fn positive_if_needed<T: Scalar>(values: &[T], needed: bool) -> Vec<T> {
    if needed {
        values.iter().map(|&v| v.max(T::of(1e-8))).collect()
    } else {
        values.to_vec()
    }
}
