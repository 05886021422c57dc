//! Batch evaluation metrics for interval predictions.

use crate::error::{Error, Result};
use crate::interval::PredictionInterval;
use crate::scalar::Scalar;

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::Empty("metric inputs"));
    }
    Ok(())
}

/// Fraction of intervals containing their truth.
pub fn empirical_coverage<T: Scalar>(intervals: &[PredictionInterval<T>], truths: &[T]) -> Result<f64> {
    check_lengths(intervals.len(), truths.len())?;
    let hits = intervals
        .iter()
        .zip(truths)
        .filter(|(iv, y)| iv.contains(**y))
        .count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// Mean post-clipping width `hi - lo`.
pub fn average_width<T: Scalar>(intervals: &[PredictionInterval<T>]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::Empty("intervals"));
    }
    let total: f64 = intervals.iter().map(|iv| iv.width().as_f64()).sum();
    Ok(total / intervals.len() as f64)
}

/// Fraction of intervals whose lower end was clipped at zero.
pub fn clipping_rate<T: Scalar>(intervals: &[PredictionInterval<T>]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::Empty("intervals"));
    }
    let clipped = intervals.iter().filter(|iv| iv.clipped_at_zero).count();
    Ok(clipped as f64 / intervals.len() as f64)
}

pub fn rmse<T: Scalar>(predictions: &[T], truths: &[T]) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    let sse: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, y)| {
            let d = p.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    Ok((sse / predictions.len() as f64).sqrt())
}
