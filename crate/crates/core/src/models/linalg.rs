//! Small dense symmetric positive-definite solves for the IRLS normal equations.

use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a row-major `p x p` SPD matrix.
/// Returns `None` when a pivot is not safely positive.
pub(crate) fn cholesky<T: Scalar>(a: &[T], p: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); p * p];
    for i in 0..p {
        // Pivot must retain a meaningful fraction of its own diagonal.
        let tiny = a[i * p + i].abs() * T::epsilon() * T::of(1024.0);
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= tiny || !s.is_finite() {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub(crate) fn cholesky_solve<T: Scalar>(l: &[T], p: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    x
}

/// Diagonal of `A⁻¹` from the Cholesky factor of `A`.
pub(crate) fn inverse_diagonal<T: Scalar>(l: &[T], p: usize) -> Vec<T> {
    (0..p)
        .map(|j| {
            let mut e = vec![T::zero(); p];
            e[j] = T::one();
            cholesky_solve(l, p, &e)[j]
        })
        .collect()
}
