//! Two-stage conformal prediction intervals for insurance claim severities.
//!
//! A frequency model predicts the claim count, a severity model takes that
//! prediction as an extra feature, and a variability model scales the
//! conformity scores. Calibration uses either a held-out split or the
//! out-of-bag predictions of random forests.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod conformal;
pub mod data;
pub mod error;
pub mod ingest;
pub mod interval;
pub mod metrics;
pub mod models;
pub mod scalar;
pub mod score;
pub mod split;
pub mod synth;

pub use conformal::{
    single_stage_locally_weighted, single_stage_split, two_stage_oob, two_stage_split, ConformalPredictor, Mode,
    OobConfig, TwoStageModels, TwoStageScore,
};
pub use data::{ClaimRecord, ClaimsDataset, ColumnKind, ColumnSpec, FeatureValue};
pub use error::{Error, Result};
pub use ingest::{encode, load_csv, write_csv, Encoding, SchemaColumn, SchemaConfig, SchemaKind};
pub use interval::PredictionInterval;
pub use metrics::{average_width, clipping_rate, empirical_coverage, rmse};
pub use models::{
    fit_cart, fit_forest, fit_glm, CartConfig, CartTree, FeatureMatrix, Forest, ForestConfig, GlmConfig, GlmFamily,
    GlmModel, ModelFactory, ModelSpec, Regressor,
};
pub use scalar::Scalar;
pub use score::{conformal_quantile, conformal_rank, MiscoverageLevel, ScoreProvenance, ScoreSet};
pub use split::{random_split, SplitIndices};
pub use synth::{generate, SynthConfig};

pub type ClaimsDataset64 = ClaimsDataset<f64>;
pub type ClaimRecord64 = ClaimRecord<f64>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type Forest64 = Forest<f64>;
pub type CartTree64 = CartTree<f64>;
pub type GlmModel64 = GlmModel<f64>;
pub type PredictionInterval64 = PredictionInterval<f64>;
pub type ConformalPredictor64 = ConformalPredictor<f64>;
pub type ScoreSet64 = ScoreSet<f64>;

pub type ClaimsDataset32 = ClaimsDataset<f32>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type Forest32 = Forest<f32>;
pub type ConformalPredictor32 = ConformalPredictor<f32>;
