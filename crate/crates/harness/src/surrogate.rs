//! Synthetic stand-ins for the motor liability and crop insurance tables,
//! plus a correctly specified gamma severity simulation.
//!
//! Surrogate columns follow the bundled schemas in order, so a surrogate
//! written with its schema loads back unchanged.

use std::collections::HashMap;

use anyhow::Result;
use freqsev::{ClaimRecord, ClaimsDataset, ColumnSpec, FeatureValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

use crate::config::SurrogateKind;

fn row_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Level dictionary numbered by first appearance, as `load_csv` does.
#[derive(Default)]
struct Levels {
    ids: HashMap<&'static str, u32>,
    names: Vec<String>,
}

impl Levels {
    fn id(&mut self, label: &'static str) -> FeatureValue<f64> {
        let next = self.names.len() as u32;
        let id = *self.ids.entry(label).or_insert_with(|| {
            self.names.push(label.to_string());
            next
        });
        FeatureValue::Level(id)
    }
}

fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u64
}

fn gamma(rng: &mut ChaCha8Rng, shape: f64, mean: f64) -> f64 {
    Gamma::new(shape, mean / shape).expect("valid gamma").sample(rng)
}

fn cents(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn pick(rng: &mut ChaCha8Rng, options: &[(&'static str, f64)]) -> &'static str {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(label, p) in options {
        acc += p;
        if u < acc {
            return label;
        }
    }
    options[options.len() - 1].0
}

/// Policy-level motor liability surrogate with columns Type, Fuel, Sex, Use,
/// Fleet, Ageph, Power, Bm, Lat, Long and Expo; severity is a total amount
/// in cents divided by the claim count.
pub fn mtpl_surrogate(n: usize, seed: u64) -> Result<ClaimsDataset<f64>> {
    let mut cats: Vec<Levels> = (0..5).map(|_| Levels::default()).collect();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        let kind = pick(&mut rng, &[("TPL", 0.58), ("partial", 0.30), ("full", 0.12)]);
        let fuel = pick(&mut rng, &[("gasoline", 0.69), ("diesel", 0.31)]);
        let sex = pick(&mut rng, &[("male", 0.74), ("female", 0.26)]);
        let usage = pick(&mut rng, &[("private", 0.95), ("work", 0.05)]);
        let fleet = pick(&mut rng, &[("no", 0.97), ("yes", 0.03)]);
        let age = rng.random_range(18..=90) as f64;
        let power = (rng.random_range(3.0f64..5.4)).exp().round();
        let bm = rng.random_range(0..=22) as f64;
        let lat = rng.random_range(49.5..51.5);
        let long = rng.random_range(2.5..6.4);
        let expo = if rng.random_bool(0.78) { 1.0 } else { rng.random_range(0.01..1.0) };

        let eta = -2.35 + 0.045 * bm - 0.008 * (age - 45.0)
            + if fuel == "diesel" { 0.18 } else { 0.0 }
            + if kind == "TPL" { 0.1 } else { 0.0 };
        let frequency = poisson(&mut rng, expo * eta.exp());
        let severity = if frequency == 0 {
            0.0
        } else {
            let mean = (6.9 + 0.004 * (power - 60.0) - 0.004 * (age - 45.0)
                + if usage == "work" { 0.3 } else { 0.0 })
            .exp();
            let total: f64 = (0..frequency).map(|_| gamma(&mut rng, 0.8, mean)).sum();
            cents(total).max(0.01) / frequency as f64
        };
        let predictors = vec![
            cats[0].id(kind),
            cats[1].id(fuel),
            cats[2].id(sex),
            cats[3].id(usage),
            cats[4].id(fleet),
            FeatureValue::Numeric(age),
            FeatureValue::Numeric(power),
            FeatureValue::Numeric(bm),
            FeatureValue::Numeric(lat),
            FeatureValue::Numeric(long),
            FeatureValue::Numeric(expo),
        ];
        rows.push(ClaimRecord {
            predictors,
            frequency,
            severity,
        });
    }
    let mut names = cats.into_iter().map(|l| l.names);
    let mut columns: Vec<ColumnSpec> = ["Type", "Fuel", "Sex", "Use", "Fleet"]
        .iter()
        .map(|&c| ColumnSpec::categorical(c, names.next().expect("five blocks")))
        .collect();
    for c in ["Ageph", "Power", "Bm", "Lat", "Long", "Expo"] {
        columns.push(ColumnSpec::numeric(c));
    }
    Ok(ClaimsDataset::new(columns, rows)?)
}

/// Municipality-year crop insurance surrogate with columns Year, Latitude,
/// Longitude, AWC, Soil, Area, Irrigation, TempPC1-2 and PrecPC1-4.
pub fn crop_surrogate(n: usize, seed: u64) -> Result<ClaimsDataset<f64>> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut soil_levels = Levels::default();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        let year = rng.random_range(1..=6) as f64;
        let lat = rng.random_range(-33.0..-5.0);
        let long = rng.random_range(-60.0..-38.0);
        let awc = rng.random_range(50.0..200.0);
        let soil = pick(
            &mut rng,
            &[
                ("latosol", 0.45),
                ("argisol", 0.25),
                ("neosol", 0.12),
                ("cambisol", 0.10),
                ("nitosol", 0.08),
            ],
        );
        let area = (rng.random_range(4.0f64..10.0)).exp().round();
        let irrigation = rng.random_range(0.0..0.3);
        let pcs: Vec<f64> = (0..6).map(|_| std_normal.sample(&mut rng)).collect();

        let eta = -6.2 + 0.8 * area.ln() - 0.35 * pcs[2] + 0.25 * pcs[0] - 2.0 * irrigation - 0.003 * awc;
        let frequency = poisson(&mut rng, eta.exp());
        let severity = if frequency == 0 {
            0.0
        } else {
            let mean = (10.5 + 0.35 * area.ln() - 0.3 * pcs[2] + 0.2 * pcs[0] * pcs[1]
                + if soil == "neosol" { 0.25 } else { 0.0 })
            .exp();
            cents(gamma(&mut rng, 1.2, mean)).max(0.01)
        };
        let mut predictors = vec![
            FeatureValue::Numeric(year),
            FeatureValue::Numeric(lat),
            FeatureValue::Numeric(long),
            FeatureValue::Numeric(awc),
            soil_levels.id(soil),
            FeatureValue::Numeric(area),
            FeatureValue::Numeric(irrigation),
        ];
        predictors.extend(pcs.into_iter().map(FeatureValue::Numeric));
        rows.push(ClaimRecord {
            predictors,
            frequency,
            severity,
        });
    }
    let columns = vec![
        ColumnSpec::numeric("Year"),
        ColumnSpec::numeric("Latitude"),
        ColumnSpec::numeric("Longitude"),
        ColumnSpec::numeric("AWC"),
        ColumnSpec::categorical("Soil", soil_levels.names),
        ColumnSpec::numeric("Area"),
        ColumnSpec::numeric("Irrigation"),
        ColumnSpec::numeric("TempPC1"),
        ColumnSpec::numeric("TempPC2"),
        ColumnSpec::numeric("PrecPC1"),
        ColumnSpec::numeric("PrecPC2"),
        ColumnSpec::numeric("PrecPC3"),
        ColumnSpec::numeric("PrecPC4"),
    ];
    Ok(ClaimsDataset::new(columns, rows)?)
}

pub fn surrogate(kind: SurrogateKind, n: usize, seed: u64) -> Result<ClaimsDataset<f64>> {
    match kind {
        SurrogateKind::Mtpl => mtpl_surrogate(n, seed),
        SurrogateKind::Crop => crop_surrogate(n, seed),
    }
}

/// Gamma shape used by [`gamma_simulation`].
pub const GAMMA_SIM_SHAPE: f64 = 2.0;

/// Mean severity of [`gamma_simulation`] given predictors `x1, x2, x3`.
pub fn gamma_sim_mean(x: &[f64]) -> f64 {
    (1.0 + 0.8 * x[0] - 0.5 * x[1]).exp()
}

/// Every unit has at least one claim and a gamma severity whose log mean is
/// linear in the predictors, so a gamma GLM is correctly specified.
pub fn gamma_simulation(n: usize, seed: u64) -> Result<ClaimsDataset<f64>> {
    let rows = (0..n)
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let frequency = 1 + poisson(&mut rng, 1.0);
            let severity = gamma(&mut rng, GAMMA_SIM_SHAPE, gamma_sim_mean(&x));
            ClaimRecord {
                predictors: x.into_iter().map(FeatureValue::Numeric).collect(),
                frequency,
                severity,
            }
        })
        .collect();
    let columns = ["x1", "x2", "x3"].iter().map(|&c| ColumnSpec::numeric(c)).collect();
    Ok(ClaimsDataset::new(columns, rows)?)
}
