//! Conformity scores and the conformal order statistic.
//!
//! Given `m` exchangeable scores and a miscoverage level `alpha`, the
//! calibrated radius is the `k`-th smallest score with
//! `k = ceil((1 - alpha) * (m + 1))`. Ties are kept (the order statistic of
//! the multiset); ties can only make the resulting intervals more
//! conservative, so coverage stays at least `1 - alpha`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nominal miscoverage level, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MiscoverageLevel(f64);

impl MiscoverageLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreProvenance {
    Calibration,
    OutOfBag,
}

/// A pool of finite, nonnegative conformity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet<T> {
    scores: Vec<T>,
    provenance: ScoreProvenance,
}

impl<T: Scalar> ScoreSet<T> {
    pub fn new(scores: Vec<T>, provenance: ScoreProvenance) -> Result<Self> {
        if let Some((index, v)) = scores
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return Err(Error::InvalidScore {
                index,
                value: v.as_f64(),
            });
        }
        Ok(Self { scores, provenance })
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn provenance(&self) -> ScoreProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores in increasing order.
    pub fn sorted(&self) -> Vec<T> {
        let mut v = self.scores.clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
        v
    }
}

/// The 1-based rank `k = ceil((1 - alpha) * (m + 1))`.
///
/// A relative slack of 1e-12 absorbs products such as `0.7 * 30 = 21.000000000000004`
/// that should be exact integers for decimal alphas.
pub fn conformal_rank(m: usize, alpha: MiscoverageLevel) -> usize {
    let x = (1.0 - alpha.alpha()) * (m as f64 + 1.0);
    (x - 1e-12 * x.max(1.0)).ceil().max(1.0) as usize
}

/// Smallest pool size `m` for which `conformal_rank(m, alpha) <= m`.
pub fn min_pool_size(alpha: MiscoverageLevel) -> usize {
    let mut m = ((1.0 - alpha.alpha()) / alpha.alpha()).floor().max(1.0) as usize;
    while m > 1 && conformal_rank(m - 1, alpha) <= m - 1 {
        m -= 1;
    }
    while conformal_rank(m, alpha) > m {
        m += 1;
    }
    m
}

/// The calibrated radius r̂: the `k`-th smallest score.
///
/// Errors with [`Error::CalibrationTooSmall`] when `k > m`, carrying the
/// minimum pool size that would make the quantile finite.
pub fn conformal_quantile<T: Scalar>(scores: &ScoreSet<T>, alpha: MiscoverageLevel) -> Result<T> {
    let m = scores.len();
    if m == 0 {
        return Err(Error::Empty("conformity scores"));
    }
    let k = conformal_rank(m, alpha);
    if k > m {
        return Err(Error::CalibrationTooSmall {
            needed: min_pool_size(alpha),
            have: m,
        });
    }
    let mut buf = scores.scores.clone();
    let (_, kth, _) =
        buf.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("scores are finite"));
    Ok(*kth)
}
