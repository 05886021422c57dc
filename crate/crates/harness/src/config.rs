//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "synthetic"
//! alpha = 0.1
//! seed = 1
//!
//! [data]
//! source = "synthetic"
//! n = 10000
//!
//! [[methods]]
//! method = "split"
//! frequency = { kind = "forest", n_trees = 500 }
//! severity = { kind = "gamma_glm" }
//! variability = { kind = "gamma_glm" }
//!
//! [[methods]]
//! method = "oob"
//! forest = { n_trees = 500 }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use freqsev::{ForestConfig, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::presets;

fn default_alpha() -> f64 {
    0.1
}

fn default_one() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_p_zero() -> f64 {
    0.5
}

fn default_proportions() -> [f64; 3] {
    [0.5, 0.25, 0.25]
}

fn default_plot_sample() -> usize {
    50
}

fn default_n_boot() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_one")]
    pub replications: usize,
    /// Record per-method wall-clock time; turn off for byte-identical reports.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitConfig,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Mtpl,
    Crop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Zero-inflated synthetic claims, regenerated for every replication.
    Synthetic {
        n: usize,
        #[serde(default = "default_p_zero")]
        p_zero_mixture: f64,
    },
    /// A CSV file read with a schema file or a bundled schema name.
    Csv { path: PathBuf, schema: String },
    /// Synthetic data shaped like a bundled schema.
    Surrogate { kind: SurrogateKind, n: usize },
    /// Positive claim counts with a correctly specified gamma severity.
    GammaSimulation { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_proportions")]
    pub proportions: [f64; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            proportions: default_proportions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    /// Two-stage split conformal.
    Split {
        #[serde(default)]
        label: Option<String>,
        frequency: ModelSpec,
        severity: ModelSpec,
        variability: ModelSpec,
    },
    /// Two-stage out-of-bag conformal; trains on training and calibration rows.
    Oob {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        forest: ForestConfig,
        #[serde(default)]
        oob_positive_only: bool,
    },
    /// Parametric bootstrap from a gamma severity GLM.
    Bootstrap {
        #[serde(default)]
        label: Option<String>,
        frequency: ModelSpec,
        #[serde(default = "default_n_boot")]
        n_boot: usize,
    },
}

impl MethodSpec {
    pub fn method_name(&self) -> &'static str {
        match self {
            Self::Split { .. } => "split",
            Self::Oob { .. } => "oob",
            Self::Bootstrap { .. } => "bootstrap",
        }
    }

    /// Display name of the severity model family.
    pub fn model_name(&self) -> &'static str {
        match self {
            Self::Split { severity, .. } => match severity {
                ModelSpec::Forest(_) => "random_forest",
                ModelSpec::GammaGlm(_) => "gamma",
                ModelSpec::PoissonGlm(_) => "poisson",
            },
            Self::Oob { .. } => "random_forest",
            Self::Bootstrap { .. } => "gamma",
        }
    }

    pub fn label(&self) -> String {
        let explicit = match self {
            Self::Split { label, .. } | Self::Oob { label, .. } | Self::Bootstrap { label, .. } => label,
        };
        explicit
            .clone()
            .unwrap_or_else(|| format!("{}_{}", self.method_name(), self.model_name()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Test rows written to each plot-data file.
    #[serde(default = "default_plot_sample")]
    pub plot_sample: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            plot_sample: default_plot_sample(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| anyhow!("invalid experiment config: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file, or a bundled preset when `reference` names one.
    pub fn load(reference: &str) -> Result<Self> {
        let path = Path::new(reference);
        if path.exists() {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut config = Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
            if let DataSource::Csv { path: csv, .. } = &mut config.data {
                if csv.is_relative() {
                    if let Some(parent) = path.parent() {
                        *csv = parent.join(&*csv);
                    }
                }
            }
            return Ok(config);
        }
        match presets::config(reference) {
            Some(text) => Self::from_toml_str(text).with_context(|| format!("in bundled preset `{reference}`")),
            None => bail!(
                "no config file or bundled preset named `{reference}` (presets: {})",
                presets::CONFIG_NAMES.join(", ")
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha: must lie in (0, 1), got {}", self.alpha);
        }
        if self.replications == 0 {
            bail!("replications: must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("methods: at least one method is required");
        }
        let p = self.split.proportions;
        if p.iter().any(|&v| !(v > 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bail!("split.proportions: must be positive and sum to 1, got {p:?}");
        }
        match &self.data {
            DataSource::Synthetic { n, p_zero_mixture } => {
                if *n < 3 {
                    bail!("data.n: must be at least 3");
                }
                if !(0.0..=1.0).contains(p_zero_mixture) {
                    bail!("data.p_zero_mixture: must lie in [0, 1]");
                }
            }
            DataSource::Surrogate { n, .. } | DataSource::GammaSimulation { n } => {
                if *n < 3 {
                    bail!("data.n: must be at least 3");
                }
            }
            DataSource::Csv { .. } => {}
        }
        let mut labels = std::collections::HashSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            if !labels.insert(m.label()) {
                bail!("methods[{i}].label: duplicate label `{}`", m.label());
            }
            match m {
                MethodSpec::Oob { forest, .. } if forest.n_trees == 0 => {
                    bail!("methods[{i}].forest.n_trees: must be at least 1")
                }
                MethodSpec::Bootstrap { n_boot, .. } if *n_boot < 2 => {
                    bail!("methods[{i}].n_boot: insufficient bootstrap draws ({n_boot})")
                }
                MethodSpec::Split {
                    frequency,
                    severity,
                    variability,
                    ..
                } => {
                    for (stage, spec) in [("frequency", frequency), ("severity", severity), ("variability", variability)] {
                        if let ModelSpec::Forest(f) = spec {
                            if f.n_trees == 0 {
                                bail!("methods[{i}].{stage}.n_trees: must be at least 1");
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// SHA-256 of the config with output settings removed.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
