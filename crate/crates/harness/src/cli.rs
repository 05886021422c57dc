//! Command-line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use freqsev::{generate, write_csv, SchemaConfig, SynthConfig};

use crate::config::ExperimentConfig;
use crate::coverage::{validate_coverage, CoverageMethod, ValidateConfig};
use crate::plot::write_outputs;
use crate::report::{render_table, Report};
use crate::run::run;

#[derive(Parser, Debug)]
#[command(name = "freqsev", version, about = "Conformal prediction intervals for claim severity")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic claims dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; a schema is written next to it with a `.toml` extension.
        #[arg(long)]
        out: PathBuf,
        /// Mixing weight of the structural-zero component.
        #[arg(long, default_value_t = 0.5)]
        p_zero: f64,
    },
    /// Run one experiment config (a file or a bundled preset name).
    Run {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Output directory; overrides the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall-clock times out of the report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run several configs on the same test rows and print one table.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timing: bool,
    },
    /// Monte Carlo check that empirical coverage lies in the finite-sample band.
    ValidateCoverage {
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        replications: usize,
        #[arg(long, default_value_t = 80)]
        n_train: usize,
        #[arg(long, default_value_t = 20)]
        n_calibration: usize,
        #[arg(long, default_value_t = 1)]
        n_test: usize,
        #[arg(long, default_value_t = 50)]
        n_trees: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CliMethod::Split)]
        method: CliMethod,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMethod {
    SingleStandard,
    SingleLocallyWeighted,
    Split,
    Oob,
}

impl From<CliMethod> for CoverageMethod {
    fn from(m: CliMethod) -> Self {
        match m {
            CliMethod::SingleStandard => Self::SingleStandard,
            CliMethod::SingleLocallyWeighted => Self::SingleLocallyWeighted,
            CliMethod::Split => Self::Split,
            CliMethod::Oob => Self::Oob,
        }
    }
}

fn load_config(reference: &str, seed: Option<u64>, no_timing: bool) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(reference)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if no_timing {
        config.record_timing = false;
    }
    Ok(config)
}

fn synth(n: usize, seed: u64, out: &Path, p_zero: f64) -> Result<()> {
    let ds = generate(&SynthConfig {
        n,
        seed,
        p_zero_mixture: p_zero,
    })?;
    let schema = SchemaConfig::for_dataset(&ds)?;
    write_csv(&ds, out, &schema).with_context(|| format!("writing {}", out.display()))?;
    let schema_path = out.with_extension("toml");
    std::fs::write(&schema_path, schema.to_toml_string()?)
        .with_context(|| format!("writing {}", schema_path.display()))?;
    println!(
        "wrote {n} rows to {} ({:.1}% zero claim counts)",
        out.display(),
        100.0 * ds.zero_frequency_fraction()
    );
    Ok(())
}

fn compare(configs: &[String], seed: Option<u64>, out: Option<&Path>, no_timing: bool) -> Result<()> {
    let mut reports: Vec<Report> = Vec::new();
    for reference in configs {
        let config = load_config(reference, seed, no_timing)?;
        let output = run(&config).with_context(|| format!("running `{reference}`"))?;
        if let Some(first) = reports.first() {
            if first.test_digest != output.report.test_digest {
                bail!(
                    "`{reference}` scores different test rows than `{}` (test digest {} vs {})",
                    configs[0],
                    output.report.test_digest,
                    first.test_digest
                );
            }
        }
        if let Some(dir) = out {
            write_outputs(&output, &dir.join(&config.name), config.output.plot_sample)?;
        }
        reports.push(output.report);
    }
    let table = render_table(&reports);
    print!("{table}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("comparison.txt"), &table)?;
        let mut json = serde_json::to_string_pretty(&reports)?;
        json.push('\n');
        std::fs::write(dir.join("comparison.json"), json)?;
    }
    Ok(())
}

/// Runs a parsed command; `Ok(false)` means a check ran and failed.
pub fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth { n, seed, out, p_zero } => synth(n, seed, &out, p_zero)?,
        Command::Run {
            config,
            seed,
            alpha,
            replications,
            out,
            no_timing,
        } => {
            let mut config = load_config(&config, seed, no_timing)?;
            if let Some(alpha) = alpha {
                config.alpha = alpha;
            }
            if let Some(r) = replications {
                config.replications = r;
            }
            let output = run(&config)?;
            print!("{}", output.report.to_table());
            if let Some(dir) = out.or_else(|| config.output.dir.clone()) {
                write_outputs(&output, &dir, config.output.plot_sample)?;
            }
        }
        Command::Compare {
            configs,
            seed,
            out,
            no_timing,
        } => compare(&configs, seed, out.as_deref(), no_timing)?,
        Command::ValidateCoverage {
            alpha,
            replications,
            n_train,
            n_calibration,
            n_test,
            n_trees,
            seed,
            method,
        } => {
            let v = validate_coverage(&ValidateConfig {
                alpha,
                replications,
                n_train,
                n_calibration,
                n_test,
                n_trees,
                seed,
                method: method.into(),
            })?;
            println!("{}", v.summary());
            return Ok(v.pass);
        }
    }
    Ok(true)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
