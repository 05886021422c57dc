//! Drop-first one-hot encoding of categorical predictors.
//!
//! The level dictionary is frozen on the rows the encoding is fitted on.
//! At transform time a level that was never seen during fitting maps to the
//! all-zeros code of its block, the same code as the dropped reference level.

use serde::{Deserialize, Serialize};

use crate::data::{ClaimRecord, ClaimsDataset, ColumnKind, FeatureValue};
use crate::error::{Error, Result};
use crate::models::FeatureMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum Block {
    Numeric { source: usize },
    /// Indicator columns for `kept` level ids; the first observed level is dropped.
    Categorical { source: usize, kept: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    n_source: usize,
    blocks: Vec<Block>,
    names: Vec<String>,
}

impl Encoding {
    /// Freezes the level dictionary on `fit_rows` of `dataset`.
    pub fn fit<T: Scalar>(dataset: &ClaimsDataset<T>, fit_rows: &[usize]) -> Result<Self> {
        if fit_rows.is_empty() {
            return Err(Error::Empty("encoding fit rows"));
        }
        if let Some(&i) = fit_rows.iter().find(|&&i| i >= dataset.len()) {
            return Err(Error::InvalidDataset(format!("row {i} out of range")));
        }
        let mut blocks = Vec::new();
        let mut names = Vec::new();
        for (c, spec) in dataset.columns().iter().enumerate() {
            match &spec.kind {
                ColumnKind::Numeric => {
                    blocks.push(Block::Numeric { source: c });
                    names.push(spec.name.clone());
                }
                ColumnKind::Categorical { levels } => {
                    let mut seen = vec![false; levels.len()];
                    for &i in fit_rows {
                        if let FeatureValue::Level(l) = dataset.rows()[i].predictors[c] {
                            seen[l as usize] = true;
                        }
                    }
                    let kept: Vec<u32> = (0..levels.len() as u32)
                        .filter(|&l| seen[l as usize])
                        .skip(1)
                        .collect();
                    for &l in &kept {
                        names.push(format!("{}={}", spec.name, levels[l as usize]));
                    }
                    blocks.push(Block::Categorical { source: c, kept });
                }
            }
        }
        Ok(Self {
            n_source: dataset.n_predictors(),
            blocks,
            names,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn transform_record<T: Scalar>(&self, record: &ClaimRecord<T>) -> Result<Vec<T>> {
        if record.predictors.len() != self.n_source {
            return Err(Error::ArityMismatch {
                expected: self.n_source,
                got: record.predictors.len(),
            });
        }
        let mut out = Vec::with_capacity(self.names.len());
        for block in &self.blocks {
            match (block, record.predictors[block_source(block)]) {
                (Block::Numeric { .. }, FeatureValue::Numeric(v)) => out.push(v),
                (Block::Categorical { kept, .. }, FeatureValue::Level(l)) => {
                    out.extend(kept.iter().map(|&k| if k == l { T::one() } else { T::zero() }));
                }
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "predictor {} has the wrong kind for this encoding",
                        block_source(block)
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Encodes `rows` of `dataset` in the given order.
    pub fn transform<T: Scalar>(&self, dataset: &ClaimsDataset<T>, rows: &[usize]) -> Result<FeatureMatrix<T>> {
        let mut data = Vec::with_capacity(rows.len() * self.names.len());
        for &i in rows {
            let record = dataset
                .rows()
                .get(i)
                .ok_or_else(|| Error::InvalidDataset(format!("row {i} out of range")))?;
            data.extend(self.transform_record(record)?);
        }
        if self.names.is_empty() {
            return Ok(FeatureMatrix::no_columns(rows.len()));
        }
        FeatureMatrix::from_flat(data, self.names.clone())
    }

    pub fn transform_all<T: Scalar>(&self, dataset: &ClaimsDataset<T>) -> Result<FeatureMatrix<T>> {
        let rows: Vec<usize> = (0..dataset.len()).collect();
        self.transform(dataset, &rows)
    }
}

fn block_source(block: &Block) -> usize {
    match block {
        Block::Numeric { source } | Block::Categorical { source, .. } => *source,
    }
}

/// Fits an encoding on `fit_rows` and encodes every row of `dataset`.
pub fn encode<T: Scalar>(dataset: &ClaimsDataset<T>, fit_rows: &[usize]) -> Result<(FeatureMatrix<T>, Encoding)> {
    let encoding = Encoding::fit(dataset, fit_rows)?;
    Ok((encoding.transform_all(dataset)?, encoding))
}
