use crate::scalar::Scalar;

/// A prediction interval `[lo, hi]` around a point prediction `center`.
///
/// `half_width_raw` is the radius ε before any clipping at zero. Two-stage
/// severity intervals are clipped (`lo = max(0, center - ε)`); single-stage
/// intervals are not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval<T> {
    pub lo: T,
    pub hi: T,
    pub center: T,
    pub half_width_raw: T,
    pub clipped_at_zero: bool,
}

impl<T: Scalar> PredictionInterval<T> {
    /// Symmetric interval `center ± eps` with the lower end clipped at zero.
    pub fn clipped(center: T, eps: T) -> Self {
        let raw_lo = center - eps;
        let clipped = raw_lo < T::zero();
        Self {
            lo: if clipped { T::zero() } else { raw_lo },
            hi: center + eps,
            center,
            half_width_raw: eps,
            clipped_at_zero: clipped,
        }
    }

    /// Symmetric interval `center ± eps`, no clipping.
    pub fn symmetric(center: T, eps: T) -> Self {
        Self {
            lo: center - eps,
            hi: center + eps,
            center,
            half_width_raw: eps,
            clipped_at_zero: false,
        }
    }

    /// Reported width `hi - lo`, measured after clipping.
    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, y: T) -> bool {
        self.lo <= y && y <= self.hi
    }
}
