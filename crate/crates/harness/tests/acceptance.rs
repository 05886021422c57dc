//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p freqsev-harness --test acceptance -- --nocapture`
//! to see the report.

use std::fmt::Write as _;

use freqsev::models::forest::forest_predict;
use freqsev::{
    conformal_quantile, conformal_rank, fit_cart, fit_forest, fit_glm, load_csv, random_split,
    single_stage_locally_weighted, single_stage_split, two_stage_split, write_csv, CartConfig, CartTree,
    ClaimsDataset, FeatureMatrix, Forest, ForestConfig, GlmConfig, GlmFamily, MiscoverageLevel, ModelFactory,
    ModelSpec, Regressor, ScoreProvenance, ScoreSet, SchemaConfig, TwoStageModels,
};
use freqsev_harness::coverage::coverage_std_error;
use freqsev_harness::presets;
use freqsev_harness::surrogate::{crop_surrogate, mtpl_surrogate};
use freqsev_harness::{run, validate_coverage, CoverageMethod, ExperimentConfig, Report, ValidateConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    id: &'static str,
    title: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    fn line(&self) -> String {
        let mut s = format!(
            "{} [{}] {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
        if !self.failures.is_empty() {
            let _ = write!(s, " | failed: {}", self.failures.join("; "));
        }
        if !self.notes.is_empty() {
            let _ = write!(s, " | {}", self.notes.join("; "));
        }
        s
    }
}

fn lvl(a: f64) -> MiscoverageLevel {
    MiscoverageLevel::new(a).unwrap()
}

fn preset(name: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml_str(presets::config(name).unwrap()).unwrap();
    c.record_timing = false;
    c
}

fn coverage_of(report: &Report, label: &str) -> f64 {
    report.method(label).unwrap_or_else(|| panic!("no method {label}")).coverage
}

fn criterion_1() -> Check {
    let mut c = Check::new("1", "coverage band, two-stage split, alpha 0.2, m = 20, 1000 replications");
    let v = validate_coverage(&ValidateConfig {
        method: CoverageMethod::Split,
        ..ValidateConfig::default()
    })
    .unwrap();
    c.expect(
        v.pass,
        format!(
            "coverage {:.4} in [{:.4}, {:.4})",
            v.coverage, v.acceptance.0, v.acceptance.1
        ),
    );
    c
}

fn criteria_2_and_6(table6: &Report) -> (Check, Check) {
    let mut c2 = Check::new("2", "synthetic reproduction, n = 10000, 50/25/25, alpha 0.1");
    let z = table6.zero_frequency_fraction;
    c2.expect((z - 0.6743).abs() <= 0.015, format!("zero fraction {z:.4}"));
    let labels = ["split_gamma", "split_random_forest", "oob_random_forest"];
    for l in labels {
        let cov = coverage_of(table6, l);
        c2.expect((cov - 0.90).abs() <= 0.02, format!("{l} coverage {cov:.4}"));
    }
    let w: Vec<f64> = labels.iter().map(|l| table6.method(l).unwrap().average_width).collect();
    c2.expect(
        w[0] > w[1] && w[1] > w[2],
        format!("widths {:.0} > {:.0} > {:.0}", w[0], w[1], w[2]),
    );
    let rg = table6.method("split_gamma").unwrap().rmse;
    let rf = table6.method("split_random_forest").unwrap().rmse;
    c2.expect(rf < rg, format!("rmse forest {rf:.0} < gamma {rg:.0}"));

    let mut c6 = Check::new("6", "bootstrap baseline");
    let boot = coverage_of(table6, "bootstrap_gamma");
    c6.expect(boot < 0.80, format!("synthetic bootstrap coverage {boot:.4} < 0.80"));
    for l in labels {
        let cov = coverage_of(table6, l);
        c6.expect((cov - 0.90).abs() <= 0.02, format!("{l} {cov:.4}"));
    }
    let sim = run(&preset("gamma_simulation")).unwrap().report;
    let gs = coverage_of(&sim, "bootstrap_gamma");
    c6.expect((gs - 0.90).abs() <= 0.03, format!("gamma simulation bootstrap coverage {gs:.4}"));
    (c2, c6)
}

/// Ten units, 25 bootstrap samples (1-based).
const WORKED_EXAMPLE: [[usize; 10]; 25] = [
    [7, 4, 10, 8, 10, 10, 4, 7, 2, 3],
    [5, 3, 6, 6, 9, 2, 1, 3, 10, 4],
    [1, 10, 2, 2, 10, 6, 5, 5, 6, 2],
    [9, 1, 4, 2, 8, 6, 3, 1, 6, 10],
    [10, 10, 3, 8, 7, 6, 10, 3, 4, 9],
    [1, 8, 7, 8, 9, 10, 6, 7, 5, 7],
    [2, 6, 5, 2, 1, 4, 5, 8, 6, 10],
    [10, 10, 2, 5, 5, 2, 3, 6, 10, 9],
    [4, 8, 6, 1, 6, 6, 1, 5, 7, 6],
    [8, 4, 6, 7, 7, 7, 10, 10, 5, 10],
    [1, 8, 6, 5, 5, 2, 1, 8, 6, 6],
    [4, 6, 10, 5, 10, 9, 10, 9, 9, 9],
    [9, 2, 8, 4, 10, 1, 1, 9, 6, 3],
    [2, 2, 8, 9, 1, 10, 2, 9, 5, 10],
    [4, 4, 1, 4, 1, 8, 4, 3, 1, 4],
    [10, 2, 1, 7, 9, 8, 4, 2, 2, 10],
    [2, 8, 7, 10, 9, 2, 1, 5, 7, 6],
    [3, 2, 4, 2, 3, 9, 9, 9, 2, 9],
    [9, 3, 10, 5, 1, 2, 1, 4, 10, 6],
    [9, 8, 9, 6, 6, 2, 1, 9, 10, 1],
    [4, 7, 4, 3, 8, 10, 4, 6, 4, 5],
    [5, 1, 9, 6, 5, 9, 1, 8, 4, 5],
    [5, 5, 3, 1, 1, 6, 1, 1, 7, 6],
    [4, 10, 5, 9, 6, 5, 1, 6, 1, 9],
    [5, 5, 5, 9, 8, 2, 4, 9, 1, 5],
];

fn criterion_3() -> Check {
    let mut c = Check::new("3", "out-of-bag mechanism");
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
    let cfg = ForestConfig {
        min_leaf: 50,
        ..ForestConfig::with_trees(1000, 11)
    };
    let frac = fit_forest(&x, &y, &cfg).unwrap().oob_fraction();
    c.expect((frac - 0.368).abs() <= 0.010, format!("mean OOB fraction {frac:.4}"));

    let trees = (1..=25).map(|j| CartTree::constant(j as f64, 1)).collect();
    let inbag = WORKED_EXAMPLE
        .iter()
        .map(|b| b.iter().map(|&u| u - 1).collect())
        .collect();
    let forest = Forest::from_parts(trees, inbag, 10).unwrap();
    let unit4: Vec<usize> = forest.oob_indices(3).iter().map(|j| j + 1).collect();
    c.expect(
        unit4 == [3, 6, 8, 11, 14, 17, 20, 23],
        format!("unit 4 sub-forest {unit4:?}"),
    );
    c
}

fn permutations(v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    (0..v.len())
        .flat_map(|i| {
            let mut rest = v.to_vec();
            let head = rest.remove(i);
            permutations(&rest).into_iter().map(move |mut p| {
                p.insert(0, head);
                p
            })
        })
        .collect()
}

fn sse(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len().max(1) as f64;
    y.iter().map(|v| (v - m).powi(2)).sum()
}

/// Greedy depth-limited SSE by exhaustive partition search.
fn greedy_sse(x: &[Vec<f64>], y: &[f64], rows: &[usize], depth: usize) -> f64 {
    let vals = |r: &[usize]| r.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let parent = sse(&vals(rows));
    if depth == 0 {
        return parent;
    }
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for f in 0..x[0].len() {
        for &i in rows {
            let t = x[i][f];
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&k| x[k][f] <= t);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let child = sse(&vals(&l)) + sse(&vals(&r));
            if parent - child > 1e-9 * parent.max(1.0) && best.as_ref().is_none_or(|b| child < b.0) {
                best = Some((child, l, r));
            }
        }
    }
    match best {
        Some((_, l, r)) => greedy_sse(x, y, &l, depth - 1) + greedy_sse(x, y, &r, depth - 1),
        None => parent,
    }
}

fn criterion_4() -> Check {
    let mut c = Check::new("4", "oracle equivalences");

    let mut quantile_ok = true;
    for m in 1..=8usize {
        let base: Vec<f64> = (0..m).map(|i| ((i * 5) % 3) as f64 + i as f64 * 0.25).collect();
        let mut sorted = base.clone();
        sorted.sort_by(f64::total_cmp);
        for a in [0.1, 0.2, 0.5] {
            let k = conformal_rank(m, lvl(a));
            for p in permutations(&base) {
                let q = conformal_quantile(&ScoreSet::new(p, ScoreProvenance::Calibration).unwrap(), lvl(a));
                quantile_ok &= if k > m { q.is_err() } else { q.unwrap() == sorted[k - 1] };
            }
        }
    }
    c.expect(quantile_ok, "quantile vs sort-and-index, all permutations m <= 8".into());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cart_ok = true;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random_range(0..5) as f64).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let fm = FeatureMatrix::from_unnamed_rows(&x).unwrap();
        for depth in 1..=2 {
            let cfg = CartConfig {
                min_leaf: 1,
                max_depth: Some(depth),
                mtry: None,
            };
            let tree = fit_cart(&fm, &y, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let got: f64 = x.iter().zip(&y).map(|(r, v)| (tree.predict(r).unwrap() - v).powi(2)).sum();
            let want = greedy_sse(&x, &y, &(0..n).collect::<Vec<_>>(), depth);
            cart_ok &= (got - want).abs() <= 1e-7 * want.max(1.0);
        }
    }
    c.expect(cart_ok, "CART vs exhaustive split search, 200 tables, depth <= 2".into());

    let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random::<f64>() * 4.0, rng.random::<f64>()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0].sin() + r[1]).collect();
    let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
    let forest = fit_forest(&x, &y, &ForestConfig::with_trees(40, 3)).unwrap();
    let mut forest_ok = true;
    for (i, row) in rows.iter().enumerate() {
        let all = forest.trees().iter().map(|t| t.predict(row).unwrap()).sum::<f64>() / 40.0;
        forest_ok &= (forest_predict(&forest, row).unwrap() - all).abs() < 1e-12;
        let members: Vec<usize> = (0..40).filter(|&j| !forest.inbag(j).contains(&(i as u32))).collect();
        if !members.is_empty() {
            let oob = members.iter().map(|&j| forest.trees()[j].predict(row).unwrap()).sum::<f64>()
                / members.len() as f64;
            forest_ok &= (forest.oob_predict(i, row).unwrap() - oob).abs() < 1e-12;
        }
    }
    c.expect(forest_ok, "forest and OOB predictions vs membership scans".into());

    let yg: Vec<f64> = (0..50).map(|_| rng.random_range(0.5..100.0)).collect();
    let g = fit_glm(&FeatureMatrix::no_columns(50), &yg, GlmFamily::Gamma, &GlmConfig::default()).unwrap();
    let mean = yg.iter().sum::<f64>() / 50.0;
    let diff = (g.predict(&[]).unwrap() - mean).abs();
    c.expect(diff <= 1e-8, format!("intercept-only GLM mean error {diff:.1e}"));
    c
}

#[derive(Debug)]
struct Scaled(std::sync::Arc<dyn Regressor<f64>>, f64);

impl Regressor<f64> for Scaled {
    fn n_features(&self) -> usize {
        self.0.n_features()
    }
    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.1 * self.0.predict_unchecked(x)
    }
}

fn criterion_5() -> Check {
    let mut c = Check::new("5", "property suites");
    let ds = freqsev::generate(&freqsev::SynthConfig::new(600, 17)).unwrap();
    let split = random_split(ds.len(), [0.5, 0.25, 0.25], 2).unwrap();
    let forest = ModelSpec::forest(ForestConfig::with_trees(30, 4));
    let enc = freqsev::Encoding::fit(&ds, split.train()).unwrap();
    let pick = |rows: &[usize]| {
        let x = enc.transform(&ds, rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|&i| ds.rows()[i].severity).collect();
        (x, y)
    };
    let (xt, yt) = pick(split.train());
    let (xc, yc) = pick(split.calibration());
    let (xs, _) = pick(split.test());

    let gamma = ModelSpec::gamma();
    let base = single_stage_locally_weighted((&xt, &yt), (&xc, &yc), &forest, &gamma, lvl(0.1)).unwrap();
    let mut equivariant = true;
    for k in [0.001, 0.5, 7.0, 1e4] {
        let scaled_factory = |x: &FeatureMatrix<f64>, y: &[f64]| -> freqsev::Result<std::sync::Arc<dyn Regressor<f64>>> {
            let y: Vec<f64> = y.iter().map(|v| v.max(1e-8)).collect();
            Ok(std::sync::Arc::new(Scaled(gamma.fit(x, &y)?, k)))
        };
        let scaled = single_stage_locally_weighted((&xt, &yt), (&xc, &yc), &forest, &scaled_factory, lvl(0.1)).unwrap();
        for (a, b) in base.predict_batch(&xs).unwrap().iter().zip(scaled.predict_batch(&xs).unwrap()) {
            let tol = 1e-9 * a.hi.abs().max(a.lo.abs()).max(1e-12);
            equivariant &= (a.lo - b.lo).abs() <= tol && (a.hi - b.hi).abs() <= tol;
        }
    }
    c.expect(equivariant, "locally weighted intervals invariant under sigma -> c sigma".into());

    let models = TwoStageModels {
        frequency: &forest,
        severity: &forest,
        variability: &forest,
    };
    let p = two_stage_split(&ds, &split, &models, lvl(0.1)).unwrap();
    let mut nested = true;
    let mut nonnegative = true;
    for (a1, a2) in [(0.05, 0.1), (0.1, 0.2), (0.2, 0.5)] {
        let wide = p.with_alpha(lvl(a1)).unwrap().predict_batch(&xs).unwrap();
        let narrow = p.with_alpha(lvl(a2)).unwrap().predict_batch(&xs).unwrap();
        for (w, n) in wide.iter().zip(&narrow) {
            nested &= w.lo <= n.lo && n.hi <= w.hi;
            nonnegative &= w.lo >= 0.0 && n.lo >= 0.0;
        }
    }
    c.expect(nested, "intervals nested in alpha".into());
    c.expect(nonnegative, "two-stage lower ends >= 0".into());

    let plain = single_stage_split((&xt, &yt), (&xc, &yc), &forest, lvl(0.1)).unwrap();
    let widths: Vec<f64> = plain.predict_batch(&xs).unwrap().iter().map(|i| i.width()).collect();
    let constant = widths.iter().all(|w| (w - widths[0]).abs() <= 1e-9 * widths[0].max(1.0));
    c.expect(constant, "single-stage widths constant".into());

    let mut cfg = preset("synthetic_table6");
    cfg.data = freqsev_harness::DataSource::Synthetic {
        n: 800,
        p_zero_mixture: 0.5,
    };
    for m in &mut cfg.methods {
        shrink_trees(m, 20);
    }
    let a = run(&cfg).unwrap().report.to_json().unwrap();
    let b = run(&cfg).unwrap().report.to_json().unwrap();
    c.expect(a == b, "pipelines deterministic given seed (byte-identical reports)".into());
    c
}

fn shrink_trees(m: &mut freqsev_harness::MethodSpec, trees: usize) {
    use freqsev_harness::MethodSpec;
    let fix = |s: &mut ModelSpec| {
        if let ModelSpec::Forest(f) = s {
            f.n_trees = trees;
        }
    };
    match m {
        MethodSpec::Split {
            frequency,
            severity,
            variability,
            ..
        } => {
            fix(frequency);
            fix(severity);
            fix(variability);
        }
        MethodSpec::Oob { forest, .. } => forest.n_trees = trees,
        MethodSpec::Bootstrap { frequency, n_boot, .. } => {
            fix(frequency);
            *n_boot = 200;
        }
    }
}

fn round_trip(ds: &ClaimsDataset<f64>, schema_text: &str) -> Result<(), String> {
    let schema = SchemaConfig::from_toml_str(schema_text).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("surrogate.csv");
    write_csv(ds, &path, &schema).map_err(|e| e.to_string())?;
    let back: ClaimsDataset<f64> = load_csv(&path, &schema).map_err(|e| e.to_string())?;
    if back.columns() != ds.columns() || back.len() != ds.len() {
        return Err("columns or length differ".into());
    }
    for (i, (a, b)) in back.rows().iter().zip(ds.rows()).enumerate() {
        let same = a.predictors == b.predictors
            && a.frequency == b.frequency
            && (a.severity - b.severity).abs() <= 1e-9 * b.severity.max(1.0);
        if !same {
            return Err(format!("row {i} differs"));
        }
    }
    Ok(())
}

fn criterion_7() -> Check {
    let mut c = Check::new("7", "real-data substitutes: schema round-trips and surrogate pipelines");
    for (name, ds, schema) in [
        ("mtpl", mtpl_surrogate(3000, 5).unwrap(), presets::MTPL_SCHEMA),
        ("crop", crop_surrogate(3000, 5).unwrap(), presets::CROP_SCHEMA),
    ] {
        let r = round_trip(&ds, schema);
        c.expect(r.is_ok(), format!("{name} round-trip {}", r.err().unwrap_or_else(|| "ok".into())));
    }
    for name in ["mtpl_surrogate", "crop_surrogate"] {
        let report = run(&preset(name)).unwrap().report;
        for m in report.methods.iter().filter(|m| m.method != "bootstrap") {
            let pool = m.pool_size.unwrap();
            let se = coverage_std_error(report.alpha, pool, report.n_test, 1);
            let lo = 1.0 - report.alpha - 3.0 * se;
            let hi = 1.0 - report.alpha + 1.0 / (pool as f64 + 1.0) + 3.0 * se;
            c.expect(
                m.coverage >= lo && m.coverage < hi,
                format!("{name} {} coverage {:.4} in [{lo:.4}, {hi:.4})", m.label, m.coverage),
            );
        }
    }
    c
}

#[test]
fn acceptance() {
    let table6 = run(&preset("synthetic_table6")).unwrap().report;
    let (c2, c6) = criteria_2_and_6(&table6);
    let checks = vec![criterion_1(), c2, criterion_3(), criterion_4(), criterion_5(), c6, criterion_7()];
    println!();
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
