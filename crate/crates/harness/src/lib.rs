//! Experiment harness for two-stage conformal prediction of claim severity:
//! configs, dataset surrogates, the bootstrap baseline, reports and the CLI.

pub mod bootstrap;
pub mod cli;
pub mod config;
pub mod coverage;
pub mod plot;
pub mod presets;
pub mod report;
pub mod run;
pub mod seeds;
pub mod surrogate;

pub use config::{DataSource, ExperimentConfig, MethodSpec, SurrogateKind};
pub use coverage::{validate_coverage, CoverageMethod, CoverageValidation, ValidateConfig};
pub use report::{render_table, MethodReport, Report};
pub use run::{run, RunOutput};
