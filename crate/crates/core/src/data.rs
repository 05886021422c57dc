//! Claims data model: one record per policy (or aggregated unit) holding the
//! predictor vector, the claim count and the per-claim severity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    /// Level dictionary; a record stores the index into `levels`.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical { levels },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue<T> {
    Numeric(T),
    Level(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimRecord<T> {
    pub predictors: Vec<FeatureValue<T>>,
    pub frequency: u64,
    pub severity: T,
}

/// A validated table of claim records.
///
/// Invariants checked at construction: every row matches `columns` in arity
/// and kind, levels are in range, severity is finite and nonnegative, and
/// severity is exactly zero whenever frequency is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsDataset<T> {
    columns: Vec<ColumnSpec>,
    rows: Vec<ClaimRecord<T>>,
}

impl<T: Scalar> ClaimsDataset<T> {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<ClaimRecord<T>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            validate_record(&columns, row).map_err(|msg| {
                Error::InvalidDataset(format!("row {i}: {msg}"))
            })?;
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[ClaimRecord<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len()
    }

    pub fn frequencies(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.frequency).collect()
    }

    pub fn severities(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.severity).collect()
    }

    /// Rows at `indices`, in that order, sharing this dataset's columns.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut rows = Vec::with_capacity(indices.len());
        for &i in indices {
            let row = self.rows.get(i).ok_or_else(|| {
                Error::InvalidDataset(format!("row index {i} out of range ({})", self.len()))
            })?;
            rows.push(row.clone());
        }
        Ok(Self {
            columns: self.columns.clone(),
            rows,
        })
    }

    pub fn zero_frequency_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let zeros = self.rows.iter().filter(|r| r.frequency == 0).count();
        zeros as f64 / self.rows.len() as f64
    }
}

fn validate_record<T: Scalar>(
    columns: &[ColumnSpec],
    row: &ClaimRecord<T>,
) -> std::result::Result<(), String> {
    if row.predictors.len() != columns.len() {
        return Err(format!(
            "{} predictors, expected {}",
            row.predictors.len(),
            columns.len()
        ));
    }
    for (col, value) in columns.iter().zip(&row.predictors) {
        match (&col.kind, value) {
            (ColumnKind::Numeric, FeatureValue::Numeric(v)) => {
                if !v.is_finite() {
                    return Err(format!("non-finite value in `{}`", col.name));
                }
            }
            (ColumnKind::Categorical { levels }, FeatureValue::Level(l)) => {
                if *l as usize >= levels.len() {
                    return Err(format!("level {l} out of range in `{}`", col.name));
                }
            }
            _ => return Err(format!("value kind does not match column `{}`", col.name)),
        }
    }
    if !row.severity.is_finite() || row.severity < T::zero() {
        return Err(format!("severity {} must be finite and >= 0", row.severity));
    }
    if row.frequency == 0 && row.severity != T::zero() {
        return Err(format!(
            "severity {} with zero frequency (must be 0)",
            row.severity
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::numeric("age"),
            ColumnSpec::categorical("sex", vec!["male".into(), "female".into()]),
        ]
    }

    fn rec(age: f64, sex: u32, d: u64, y: f64) -> ClaimRecord<f64> {
        ClaimRecord {
            predictors: vec![FeatureValue::Numeric(age), FeatureValue::Level(sex)],
            frequency: d,
            severity: y,
        }
    }

    #[test]
    fn accepts_valid_rows() {
        let ds = ClaimsDataset::new(cols(), vec![rec(50.0, 0, 1, 1618.0), rec(64.0, 1, 0, 0.0)])
            .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.zero_frequency_fraction(), 0.5);
    }

    #[test]
    fn rejects_positive_severity_without_claims() {
        let err = ClaimsDataset::new(cols(), vec![rec(50.0, 0, 0, 3.0)]).unwrap_err();
        assert!(err.to_string().contains("zero frequency"));
    }

    #[test]
    fn rejects_bad_arity_and_kinds() {
        let mut bad = rec(1.0, 0, 1, 1.0);
        bad.predictors.pop();
        assert!(ClaimsDataset::new(cols(), vec![bad]).is_err());
        let swapped = ClaimRecord {
            predictors: vec![FeatureValue::Level(0), FeatureValue::Numeric(1.0)],
            frequency: 1,
            severity: 1.0,
        };
        assert!(ClaimsDataset::new(cols(), vec![swapped]).is_err());
        assert!(ClaimsDataset::new(cols(), vec![rec(1.0, 7, 1, 1.0)]).is_err());
        assert!(ClaimsDataset::new(cols(), vec![rec(1.0, 0, 1, -1.0)]).is_err());
        assert!(ClaimsDataset::new(cols(), vec![rec(f64::NAN, 0, 1, 1.0)]).is_err());
    }

    #[test]
    fn subset_keeps_order() {
        let ds = ClaimsDataset::new(
            cols(),
            vec![rec(1.0, 0, 1, 1.0), rec(2.0, 0, 1, 2.0), rec(3.0, 1, 1, 3.0)],
        )
        .unwrap();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.severities(), vec![3.0, 1.0]);
        assert!(ds.subset(&[3]).is_err());
    }
}
