//! Regression models used at every stage: log-link GLMs, CART trees and
//! bagged random forests with out-of-bag bookkeeping.

pub mod cart;
pub mod forest;
pub mod glm;
mod linalg;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use cart::{fit_cart, CartConfig, CartTree, Node};
pub use forest::{fit_forest, Forest, ForestConfig};
pub use glm::{fit_glm, GlmConfig, GlmFamily, GlmModel};

/// Dense row-major matrix of encoded numeric features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    data: Vec<T>,
    n_rows: usize,
    names: Vec<String>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>], names: Vec<String>) -> Result<Self> {
        let n_cols = names.len();
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::ArityMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, names)
    }

    pub fn from_flat(data: Vec<T>, names: Vec<String>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 {
            if !data.is_empty() {
                return Err(Error::InvalidDataset("features without column names".into()));
            }
            return Ok(Self {
                data,
                n_rows: 0,
                names,
            });
        }
        if data.len() % n_cols != 0 {
            return Err(Error::InvalidDataset(format!(
                "{} values do not fill rows of {n_cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column `{}`",
                pos / n_cols,
                names[pos % n_cols]
            )));
        }
        Ok(Self {
            n_rows: data.len() / n_cols,
            data,
            names,
        })
    }

    /// `n_rows` rows with no columns, e.g. the design of an intercept-only GLM.
    pub fn no_columns(n_rows: usize) -> Self {
        Self {
            data: Vec::new(),
            n_rows,
            names: Vec::new(),
        }
    }

    /// Matrix with generated column names `x0, x1, ...`.
    pub fn from_unnamed_rows(rows: &[Vec<T>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, (0..p).map(|j| format!("x{j}")).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[T] {
        assert!(i < self.n_rows, "row {i} out of range");
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n_cols() + j]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n_rows: indices.len(),
            names: self.names.clone(),
        }
    }

    /// Appends one column, e.g. the observed or predicted claim count.
    pub fn with_column(&self, name: &str, values: &[T]) -> Result<Self> {
        if values.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                left: self.n_rows,
                right: values.len(),
            });
        }
        let p = self.n_cols();
        let mut data = Vec::with_capacity(self.n_rows * (p + 1));
        for (i, v) in values.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(*v);
        }
        let mut names = self.names.clone();
        names.push(name.to_string());
        Self::from_flat(data, names)
    }
}

/// A fitted model mapping a feature row to a real prediction.
pub trait Regressor<T: Scalar>: Send + Sync + std::fmt::Debug {
    fn n_features(&self) -> usize;

    /// Prediction without arity checking; callers go through [`Regressor::predict`].
    fn predict_unchecked(&self, x: &[T]) -> T;

    fn predict(&self, x: &[T]) -> Result<T> {
        check_arity(self.n_features(), x.len())?;
        Ok(self.predict_unchecked(x))
    }

    fn predict_matrix(&self, x: &FeatureMatrix<T>) -> Result<Vec<T>> {
        check_arity(self.n_features(), x.n_cols())?;
        Ok(x.rows().map(|r| self.predict_unchecked(r)).collect())
    }
}

pub(crate) fn check_arity(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ArityMismatch { expected, got });
    }
    Ok(())
}

/// Something that fits a [`Regressor`] on `(X, y)`.
pub trait ModelFactory<T: Scalar> {
    fn fit(&self, x: &FeatureMatrix<T>, y: &[T]) -> Result<Arc<dyn Regressor<T>>>;

    /// Whether responses must be strictly positive (gamma family).
    fn positive_response(&self) -> bool {
        false
    }
}

impl<T, F> ModelFactory<T> for F
where
    T: Scalar,
    F: Fn(&FeatureMatrix<T>, &[T]) -> Result<Arc<dyn Regressor<T>>>,
{
    fn fit(&self, x: &FeatureMatrix<T>, y: &[T]) -> Result<Arc<dyn Regressor<T>>> {
        self(x, y)
    }
}

/// The interchangeable model choices for each stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Forest(ForestConfig),
    PoissonGlm(GlmConfig),
    GammaGlm(GlmConfig),
}

impl ModelSpec {
    pub fn forest(config: ForestConfig) -> Self {
        Self::Forest(config)
    }

    pub fn poisson() -> Self {
        Self::PoissonGlm(GlmConfig::default())
    }

    pub fn gamma() -> Self {
        Self::GammaGlm(GlmConfig::default())
    }

    pub fn is_forest(&self) -> bool {
        matches!(self, Self::Forest(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Forest(_) => "forest",
            Self::PoissonGlm(_) => "poisson_glm",
            Self::GammaGlm(_) => "gamma_glm",
        }
    }

    /// Same spec with the forest seed replaced; GLMs are unaffected.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Self::Forest(c) => Self::Forest(ForestConfig { seed, ..c.clone() }),
            other => other.clone(),
        }
    }
}

impl<T: Scalar> ModelFactory<T> for ModelSpec {
    fn fit(&self, x: &FeatureMatrix<T>, y: &[T]) -> Result<Arc<dyn Regressor<T>>> {
        Ok(match self {
            Self::Forest(c) => Arc::new(fit_forest(x, y, c)?),
            Self::PoissonGlm(c) => Arc::new(fit_glm(x, y, GlmFamily::Poisson, c)?),
            Self::GammaGlm(c) => Arc::new(fit_glm(x, y, GlmFamily::Gamma, c)?),
        })
    }

    fn positive_response(&self) -> bool {
        matches!(self, Self::GammaGlm(_))
    }
}
