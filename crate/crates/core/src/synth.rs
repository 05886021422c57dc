//! Synthetic zero-inflated claims with a nonlinear exponential severity.
//!
//! Ten predictors are drawn i.i.d. from U[0, 10]. The claim count is 0 with
//! probability `p_zero_mixture` and otherwise Poisson with rate
//! `exp(0.01 x1)`. A positive count gets an exponential severity with mean
//! `4 exp(x2) + sin(x3 x4) + 5 x5^3`. Predictors x6 to x10 are noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClaimRecord, ClaimsDataset, ColumnSpec, FeatureValue};
use crate::error::{Error, Result};

pub const N_PREDICTORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub p_zero_mixture: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            seed: 0,
            p_zero_mixture: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("synthetic sample size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_zero_mixture) {
            return Err(Error::InvalidConfig(format!(
                "p_zero_mixture must lie in [0, 1], got {}",
                self.p_zero_mixture
            )));
        }
        Ok(())
    }
}

/// Conditional mean severity given a positive claim count.
pub fn severity_mean(x: &[f64]) -> f64 {
    4.0 * x[1].exp() + (x[2] * x[3]).sin() + 5.0 * x[4].powi(3)
}

/// Claim rate of the Poisson branch.
pub fn poisson_rate(x: &[f64]) -> f64 {
    (0.01 * x[0]).exp()
}

/// Population probability of a zero claim count.
pub fn population_zero_fraction(p_zero_mixture: f64) -> f64 {
    // E[exp(-exp(0.01 X))] for X ~ U[0, 10], by Simpson's rule.
    let m = 2000;
    let h = 10.0 / m as f64;
    let f = |x: f64| (-(0.01 * x).exp()).exp();
    let mut s = f(0.0) + f(10.0);
    for k in 1..m {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let p0 = s * h / 3.0 / 10.0;
    p_zero_mixture + (1.0 - p_zero_mixture) * p0
}

pub fn column_names() -> Vec<String> {
    (1..=N_PREDICTORS).map(|j| format!("x{j}")).collect()
}

fn row(seed: u64, i: usize, p_zero: f64) -> ClaimRecord<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let x: Vec<f64> = (0..N_PREDICTORS).map(|_| rng.random_range(0.0..10.0)).collect();
    let frequency = if rng.random_bool(p_zero) {
        0
    } else {
        Poisson::new(poisson_rate(&x))
            .expect("positive rate")
            .sample(&mut rng) as u64
    };
    let severity = if frequency == 0 {
        0.0
    } else {
        let mean = severity_mean(&x);
        assert!(mean > 0.0, "exponential mean must be positive");
        Exp::new(1.0 / mean).expect("positive rate").sample(&mut rng)
    };
    ClaimRecord {
        predictors: x.into_iter().map(FeatureValue::Numeric).collect(),
        frequency,
        severity,
    }
}

/// Generates `config.n` rows; row `i` depends only on `(seed, i)`.
pub fn generate(config: &SynthConfig) -> Result<ClaimsDataset<f64>> {
    config.validate()?;
    let rows: Vec<ClaimRecord<f64>> = (0..config.n)
        .into_par_iter()
        .map(|i| row(config.seed, i, config.p_zero_mixture))
        .collect();
    let columns = column_names().into_iter().map(ColumnSpec::numeric).collect();
    ClaimsDataset::new(columns, rows)
}
