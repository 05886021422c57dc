use freqsev::synth::{population_zero_fraction, poisson_rate, severity_mean};
use freqsev::{generate, FeatureValue, SynthConfig};

fn numeric(v: &FeatureValue<f64>) -> f64 {
    match v {
        FeatureValue::Numeric(x) => *x,
        FeatureValue::Level(_) => panic!("synthetic predictors are numeric"),
    }
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Zero probability by a fine midpoint rule, independent of the library's
/// quadrature.
fn zero_fraction_oracle(p_zero: f64) -> f64 {
    let k = 200_000;
    let p0: f64 = (0..k)
        .map(|i| {
            let x = (i as f64 + 0.5) * 10.0 / k as f64;
            (-(0.01 * x).exp()).exp()
        })
        .sum::<f64>()
        / k as f64;
    p_zero + (1.0 - p_zero) * p0
}

#[test]
fn population_zero_fraction_matches_quadrature() {
    for p in [0.0, 0.25, 0.5, 0.9] {
        assert!((population_zero_fraction(p) - zero_fraction_oracle(p)).abs() < 1e-8);
    }
    assert!((population_zero_fraction(0.5) - 0.675).abs() < 0.002);
}

#[test]
fn marginals_and_decoys() {
    let ds = generate(&SynthConfig::new(20_000, 8)).unwrap();
    assert_eq!(ds.n_predictors(), 10);
    let x: Vec<Vec<f64>> = ds.rows().iter().map(|r| r.predictors.iter().map(numeric).collect()).collect();
    for j in 0..10 {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        assert!(col.iter().all(|&v| (0.0..10.0).contains(&v)));
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        assert!((mean - 5.0).abs() < 0.1, "x{} mean {mean}", j + 1);
    }
    let zero = ds.zero_frequency_fraction();
    assert!((zero - 0.675).abs() < 0.015, "{zero}");

    let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.rows()[i].frequency > 0).collect();
    let sev: Vec<f64> = pos.iter().map(|&i| ds.rows()[i].severity).collect();
    // x6..x10 do not enter the severity mean
    for j in 5..10 {
        let col: Vec<f64> = pos.iter().map(|&i| x[i][j]).collect();
        assert!(corr(&col, &sev).abs() < 0.05, "x{} correlates with severity", j + 1);
    }
    let x2: Vec<f64> = pos.iter().map(|&i| x[i][1]).collect();
    assert!(corr(&x2, &sev) > 0.2);
    for (k, &i) in pos.iter().enumerate() {
        assert!(sev[k] > 0.0);
        assert!(severity_mean(&x[i]) > 0.0);
        assert!(poisson_rate(&x[i]) >= 1.0);
    }
}

#[test]
fn exponential_severity_mean() {
    let ds = generate(&SynthConfig::new(40_000, 2)).unwrap();
    let (mut sum_y, mut sum_mu, mut k) = (0.0, 0.0, 0);
    for r in ds.rows().iter().filter(|r| r.frequency > 0) {
        let x: Vec<f64> = r.predictors.iter().map(numeric).collect();
        sum_y += r.severity;
        sum_mu += severity_mean(&x);
        k += 1;
    }
    let ratio = sum_y / sum_mu;
    // heavy right tail: relative s.e. is about 0.02
    assert!((ratio - 1.0).abs() < 0.08, "{ratio} over {k} rows");
}

#[test]
fn rows_depend_only_on_seed_and_index() {
    let a = generate(&SynthConfig::new(50, 3)).unwrap();
    let b = generate(&SynthConfig::new(80, 3)).unwrap();
    assert_eq!(a.rows(), &b.rows()[..50]);
    let c = generate(&SynthConfig::new(50, 4)).unwrap();
    assert_ne!(a.rows(), c.rows());
}
