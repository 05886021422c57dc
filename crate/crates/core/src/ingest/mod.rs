//! Schema-driven CSV ingestion and export of claims tables.
//!
//! A [`SchemaConfig`] is a small TOML document naming each CSV column and
//! its role:
//!
//! ```toml
//! delimiter = ","
//! header = true
//! missing = ["", "NA"]
//!
//! [[columns]]
//! name = "Expo"
//! kind = "numeric"
//!
//! [[columns]]
//! name = "ClaimNb"
//! kind = "frequency"
//!
//! [[columns]]
//! name = "ClaimAmount"
//! kind = "total_amount"
//! ```
//!
//! With a `total_amount` column the severity is derived as
//! `total / frequency` when the frequency is positive and 0 otherwise.
//! Missing values are errors.

pub mod encode;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ClaimRecord, ClaimsDataset, ColumnKind, ColumnSpec, FeatureValue};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use encode::{encode, Encoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Numeric,
    Categorical,
    Frequency,
    Severity,
    TotalAmount,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: SchemaKind,
}

impl SchemaColumn {
    pub fn new(name: impl Into<String>, kind: SchemaKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

fn default_delimiter() -> char {
    ','
}

fn default_decimal() -> char {
    '.'
}

fn default_true() -> bool {
    true
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "NA".into()]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default = "default_decimal")]
    pub decimal: char,
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    pub columns: Vec<SchemaColumn>,
}

impl SchemaConfig {
    pub fn new(columns: Vec<SchemaColumn>) -> Result<Self> {
        let schema = Self {
            delimiter: default_delimiter(),
            header: true,
            decimal: default_decimal(),
            missing: default_missing(),
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema writing every predictor of `dataset` followed by `frequency`
    /// and `severity` columns.
    pub fn for_dataset<T: Scalar>(dataset: &ClaimsDataset<T>) -> Result<Self> {
        let mut columns: Vec<SchemaColumn> = dataset
            .columns()
            .iter()
            .map(|c| {
                let kind = if c.is_categorical() {
                    SchemaKind::Categorical
                } else {
                    SchemaKind::Numeric
                };
                SchemaColumn::new(c.name.clone(), kind)
            })
            .collect();
        columns.push(SchemaColumn::new("frequency", SchemaKind::Frequency));
        columns.push(SchemaColumn::new("severity", SchemaKind::Severity));
        Self::new(columns)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let count = |k: SchemaKind| self.columns.iter().filter(|c| c.kind == k).count();
        if count(SchemaKind::Frequency) != 1 {
            return Err(Error::Schema("exactly one frequency column is required".into()));
        }
        if count(SchemaKind::Severity) + count(SchemaKind::TotalAmount) != 1 {
            return Err(Error::Schema(
                "exactly one severity or total_amount column is required".into(),
            ));
        }
        let mut seen = HashMap::new();
        for c in &self.columns {
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
        }
        if !self.delimiter.is_ascii() || self.delimiter == '"' {
            return Err(Error::Schema(format!("unsupported delimiter {:?}", self.delimiter)));
        }
        if self.decimal != '.' && self.decimal != ',' {
            return Err(Error::Schema(format!("unsupported decimal separator {:?}", self.decimal)));
        }
        if self.decimal == self.delimiter {
            return Err(Error::Schema("decimal separator equals delimiter".into()));
        }
        Ok(())
    }

    fn predictors(&self) -> impl Iterator<Item = &SchemaColumn> {
        self.columns
            .iter()
            .filter(|c| matches!(c.kind, SchemaKind::Numeric | SchemaKind::Categorical))
    }

    fn amount_column(&self) -> &SchemaColumn {
        self.columns
            .iter()
            .find(|c| matches!(c.kind, SchemaKind::Severity | SchemaKind::TotalAmount))
            .expect("validated schema")
    }
}

struct CellParser<'a> {
    path: String,
    schema: &'a SchemaConfig,
}

impl CellParser<'_> {
    fn err(&self, row: usize, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn present<'c>(&self, cell: &'c str, row: usize, column: &str) -> Result<&'c str> {
        let cell = cell.trim();
        if self.schema.missing.iter().any(|m| m == cell) {
            return Err(self.err(row, column, "missing value"));
        }
        Ok(cell)
    }

    fn number<T: Scalar>(&self, cell: &str, row: usize, column: &str) -> Result<T> {
        let cell = self.present(cell, row, column)?;
        let text = if self.schema.decimal == ',' {
            cell.replace(',', ".")
        } else {
            cell.to_string()
        };
        let v: T = text
            .parse()
            .map_err(|_| self.err(row, column, format!("cannot parse `{cell}` as a number")))?;
        if !v.is_finite() {
            return Err(self.err(row, column, format!("non-finite value `{cell}`")));
        }
        Ok(v)
    }

    fn count(&self, cell: &str, row: usize, column: &str) -> Result<u64> {
        let v: f64 = self.number(cell, row, column)?;
        if v < 0.0 {
            return Err(self.err(row, column, "negative frequency"));
        }
        if v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(self.err(row, column, format!("frequency `{cell}` is not an integer")));
        }
        Ok(v as u64)
    }
}

/// Reads a claims table from `path` according to `schema`.
///
/// Categorical levels are numbered in order of first appearance. Row numbers
/// in errors count data rows from 1.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<ClaimsDataset<T>> {
    schema.validate()?;
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.header)
        .flexible(false)
        .from_path(path)?;

    let positions: Vec<usize> = if schema.header {
        let header = reader.headers()?.clone();
        let lookup: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
        schema
            .columns
            .iter()
            .map(|c| {
                if c.kind == SchemaKind::Ignore {
                    return Ok(lookup.get(c.name.as_str()).copied().unwrap_or(usize::MAX));
                }
                lookup
                    .get(c.name.as_str())
                    .copied()
                    .ok_or_else(|| Error::Schema(format!("missing required column `{}`", c.name)))
            })
            .collect::<Result<_>>()?
    } else {
        (0..schema.columns.len()).collect()
    };

    let parser = CellParser {
        path: path.display().to_string(),
        schema,
    };
    let predictor_cols: Vec<(usize, &SchemaColumn)> = schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.kind, SchemaKind::Numeric | SchemaKind::Categorical))
        .collect();
    let mut levels: Vec<HashMap<String, u32>> = vec![HashMap::new(); predictor_cols.len()];
    let mut level_names: Vec<Vec<String>> = vec![Vec::new(); predictor_cols.len()];
    let freq_idx = schema
        .columns
        .iter()
        .position(|c| c.kind == SchemaKind::Frequency)
        .expect("validated schema");
    let amount = schema.amount_column();
    let amount_idx = schema
        .columns
        .iter()
        .position(|c| c.name == amount.name)
        .expect("validated schema");

    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |schema_idx: usize| record.get(positions[schema_idx]).unwrap_or("");
        let mut predictors = Vec::with_capacity(predictor_cols.len());
        for (k, &(idx, col)) in predictor_cols.iter().enumerate() {
            let value = match col.kind {
                SchemaKind::Numeric => FeatureValue::Numeric(parser.number(cell(idx), row, &col.name)?),
                _ => {
                    let label = parser.present(cell(idx), row, &col.name)?;
                    let next = levels[k].len() as u32;
                    let id = *levels[k].entry(label.to_string()).or_insert_with(|| {
                        level_names[k].push(label.to_string());
                        next
                    });
                    FeatureValue::Level(id)
                }
            };
            predictors.push(value);
        }
        let frequency = parser.count(cell(freq_idx), row, &schema.columns[freq_idx].name)?;
        let value: T = parser.number(cell(amount_idx), row, &amount.name)?;
        if value < T::zero() {
            return Err(parser.err(row, &amount.name, "negative amount"));
        }
        let severity = match amount.kind {
            SchemaKind::TotalAmount if frequency > 0 => value / T::of(frequency as f64),
            _ if frequency == 0 && value > T::zero() => {
                return Err(parser.err(
                    row,
                    &amount.name,
                    format!("frequency is 0 but {} is positive", amount.name),
                ))
            }
            _ => value,
        };
        rows.push(ClaimRecord {
            predictors,
            frequency,
            severity,
        });
    }

    let columns = predictor_cols
        .iter()
        .enumerate()
        .map(|(k, (_, c))| match c.kind {
            SchemaKind::Numeric => ColumnSpec::numeric(c.name.clone()),
            _ => ColumnSpec::categorical(c.name.clone(), std::mem::take(&mut level_names[k])),
        })
        .collect();
    ClaimsDataset::new(columns, rows)
}

/// Writes `dataset` to `path` with the column order of `schema`.
///
/// Numbers use the shortest representation that parses back to the same
/// value. Ignored columns are written empty. A `total_amount` column is
/// written as `severity * frequency`.
pub fn write_csv<T: Scalar>(dataset: &ClaimsDataset<T>, path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<()> {
    schema.validate()?;
    let lookup: HashMap<&str, usize> = dataset
        .columns()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), i))
        .collect();
    for c in schema.predictors() {
        let Some(&i) = lookup.get(c.name.as_str()) else {
            return Err(Error::Schema(format!("dataset has no column `{}`", c.name)));
        };
        let is_cat = dataset.columns()[i].is_categorical();
        if is_cat != (c.kind == SchemaKind::Categorical) {
            return Err(Error::Schema(format!("column `{}` kind differs from the dataset", c.name)));
        }
    }
    if schema.predictors().count() != dataset.n_predictors() {
        return Err(Error::Schema("schema does not list every dataset predictor".into()));
    }

    let file = fs::File::create(path.as_ref())?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(schema.delimiter as u8)
        .from_writer(std::io::BufWriter::new(file));
    if schema.header {
        writer.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    }
    let fmt = |v: T| {
        let s = v.to_string();
        if schema.decimal == ',' {
            s.replace('.', ",")
        } else {
            s
        }
    };
    let mut fields: Vec<String> = Vec::with_capacity(schema.columns.len());
    for record in dataset.rows() {
        fields.clear();
        for c in &schema.columns {
            fields.push(match c.kind {
                SchemaKind::Numeric | SchemaKind::Categorical => {
                    let i = lookup[c.name.as_str()];
                    match (&dataset.columns()[i].kind, record.predictors[i]) {
                        (_, FeatureValue::Numeric(v)) => fmt(v),
                        (ColumnKind::Categorical { levels }, FeatureValue::Level(l)) => levels[l as usize].clone(),
                        (ColumnKind::Numeric, FeatureValue::Level(_)) => unreachable!("validated dataset"),
                    }
                }
                SchemaKind::Frequency => record.frequency.to_string(),
                SchemaKind::Severity => fmt(record.severity),
                SchemaKind::TotalAmount => fmt(record.severity * T::of(record.frequency as f64)),
                SchemaKind::Ignore => String::new(),
            });
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    let mut inner = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    inner.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn total_schema() -> SchemaConfig {
        SchemaConfig::new(vec![
            SchemaColumn::new("sex", SchemaKind::Categorical),
            SchemaColumn::new("age", SchemaKind::Numeric),
            SchemaColumn::new("policy", SchemaKind::Ignore),
            SchemaColumn::new("claims", SchemaKind::Frequency),
            SchemaColumn::new("total", SchemaKind::TotalAmount),
        ])
        .unwrap()
    }

    #[test]
    fn derives_severity_from_total() {
        let f = write("policy,sex,age,claims,total\n1,male,40,2,232.60\n2,female,35,0,0\n");
        let ds: ClaimsDataset<f64> = load_csv(f.path(), &total_schema()).unwrap();
        assert_eq!(ds.len(), 2);
        assert!((ds.rows()[0].severity - 116.30).abs() < 1e-12);
        assert_eq!(ds.rows()[1].severity, 0.0);
        assert_eq!(
            ds.columns()[0].kind,
            ColumnKind::Categorical {
                levels: vec!["male".into(), "female".into()]
            }
        );
    }

    #[test]
    fn reports_bad_cells() {
        let f = write("policy,sex,age,claims,total\n1,male,forty,2,10\n");
        let err = load_csv::<f64>(f.path(), &total_schema()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, ref column, .. } if column == "age"));

        let f = write("policy,sex,age,claims,total\n1,male,40,0,10\n");
        assert!(matches!(
            load_csv::<f64>(f.path(), &total_schema()),
            Err(Error::Parse { row: 1, .. })
        ));

        let f = write("policy,sex,age,claims,total\n1,male,40,-1,10\n");
        assert!(load_csv::<f64>(f.path(), &total_schema()).is_err());

        let f = write("policy,sex,age,claims,total\n1,male,NA,1,10\n");
        assert!(load_csv::<f64>(f.path(), &total_schema()).is_err());

        let f = write("sex,age,claims\nmale,40,1\n");
        assert!(matches!(load_csv::<f64>(f.path(), &total_schema()), Err(Error::Schema(_))));
    }

    #[test]
    fn schema_validation() {
        assert!(SchemaConfig::new(vec![SchemaColumn::new("a", SchemaKind::Numeric)]).is_err());
        assert!(SchemaConfig::new(vec![
            SchemaColumn::new("d", SchemaKind::Frequency),
            SchemaColumn::new("s", SchemaKind::Severity),
            SchemaColumn::new("t", SchemaKind::TotalAmount),
        ])
        .is_err());
        assert!(SchemaConfig::new(vec![
            SchemaColumn::new("d", SchemaKind::Frequency),
            SchemaColumn::new("d", SchemaKind::Severity),
        ])
        .is_err());
        let s = total_schema();
        assert_eq!(SchemaConfig::from_toml_str(&s.to_toml_string().unwrap()).unwrap(), s);
    }

    #[test]
    fn decimal_comma_and_semicolon() {
        let mut schema = total_schema();
        schema.delimiter = ';';
        schema.decimal = ',';
        let f = write("policy;sex;age;claims;total\n1;male;40,5;2;232,60\n");
        let ds: ClaimsDataset<f64> = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.rows()[0].predictors[1], FeatureValue::Numeric(40.5));
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), &schema).unwrap();
        let back: ClaimsDataset<f64> = load_csv(out.path(), &schema).unwrap();
        assert!((back.rows()[0].severity - ds.rows()[0].severity).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_writes_header_only() {
        let ds = ClaimsDataset::<f64>::new(vec![ColumnSpec::numeric("age")], vec![]).unwrap();
        let schema = SchemaConfig::for_dataset(&ds).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), &schema).unwrap();
        assert_eq!(fs::read_to_string(out.path()).unwrap(), "age,frequency,severity\n");
    }
}
