//! Log-link generalized linear models (gamma, Poisson) fitted by IRLS.

use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve, inverse_diagonal};
use super::{check_arity, FeatureMatrix, Regressor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmFamily {
    Gamma,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmConfig {
    pub max_iter: usize,
    /// Convergence threshold on the maximum absolute coefficient change.
    pub tol: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
        }
    }
}

/// A fitted log-link GLM; `coefficients[0]` is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel<T> {
    pub family: GlmFamily,
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    /// Pearson estimate for gamma; fixed at 1 for Poisson.
    pub dispersion: T,
    pub deviance: T,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Scalar> GlmModel<T> {
    /// A model from given coefficients (intercept first).
    pub fn from_coefficients(family: GlmFamily, coefficients: Vec<T>, dispersion: T) -> Self {
        let p = coefficients.len();
        Self {
            family,
            coefficients,
            std_errors: vec![T::nan(); p],
            dispersion,
            deviance: T::nan(),
            converged: true,
            iterations: 0,
        }
    }

    pub fn linear_predictor(&self, x: &[T]) -> T {
        let mut eta = self.coefficients[0];
        for (b, v) in self.coefficients[1..].iter().zip(x) {
            eta += *b * *v;
        }
        eta
    }
}

impl<T: Scalar> Regressor<T> for GlmModel<T> {
    fn n_features(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn predict_unchecked(&self, x: &[T]) -> T {
        clamp_eta(self.linear_predictor(x)).exp()
    }
}

/// Evaluates `exp(<coefficients, [1, x]>)`.
pub fn glm_predict<T: Scalar>(model: &GlmModel<T>, x: &[T]) -> Result<T> {
    check_arity(model.n_features(), x.len())?;
    Ok(model.predict_unchecked(x))
}

fn clamp_eta<T: Scalar>(eta: T) -> T {
    let bound = T::max_value().ln() * T::of(0.5);
    eta.max(-bound).min(bound)
}

fn unit_deviance<T: Scalar>(family: GlmFamily, y: T, mu: T) -> T {
    let two = T::of(2.0);
    match family {
        GlmFamily::Poisson => {
            let term = if y > T::zero() { y * (y / mu).ln() } else { T::zero() };
            two * (term - (y - mu))
        }
        GlmFamily::Gamma => two * (-(y / mu).ln() + (y - mu) / mu),
    }
}

fn total_deviance<T: Scalar>(family: GlmFamily, y: &[T], mu: &[T]) -> T {
    y.iter()
        .zip(mu)
        .map(|(&yi, &mi)| unit_deviance(family, yi, mi))
        .sum()
}

/// Working weight and working response for the log link.
fn working<T: Scalar>(family: GlmFamily, y: T, mu: T, eta: T) -> (T, T) {
    let z = eta + (y - mu) / mu;
    match family {
        GlmFamily::Poisson => (mu, z),
        GlmFamily::Gamma => (T::one(), z),
    }
}

struct NormalEquations<T> {
    xtwx: Vec<T>,
    xtwz: Vec<T>,
}

fn normal_equations<T: Scalar>(
    x: &FeatureMatrix<T>,
    w: &[T],
    z: &[T],
) -> NormalEquations<T> {
    let p = x.n_cols() + 1;
    let mut xtwx = vec![T::zero(); p * p];
    let mut xtwz = vec![T::zero(); p];
    let mut design = vec![T::one(); p];
    for (i, row) in x.rows().enumerate() {
        design[1..].copy_from_slice(row);
        for a in 0..p {
            let wa = w[i] * design[a];
            xtwz[a] += wa * z[i];
            for b in 0..=a {
                xtwx[a * p + b] += wa * design[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[b * p + a] = xtwx[a * p + b];
        }
    }
    NormalEquations { xtwx, xtwz }
}

fn eta_of<T: Scalar>(x: &FeatureMatrix<T>, beta: &[T]) -> Vec<T> {
    x.rows()
        .map(|row| {
            let mut eta = beta[0];
            for (b, v) in beta[1..].iter().zip(row) {
                eta += *b * *v;
            }
            clamp_eta(eta)
        })
        .collect()
}

/// Fits a log-link GLM by iteratively reweighted least squares with
/// step halving on deviance increase.
pub fn fit_glm<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &[T],
    family: GlmFamily,
    config: &GlmConfig,
) -> Result<GlmModel<T>> {
    let n = x.n_rows();
    let p = x.n_cols() + 1;
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n <= p {
        return Err(Error::InvalidResponse(format!(
            "GLM needs more rows than coefficients ({n} rows, {p} coefficients)"
        )));
    }
    match family {
        GlmFamily::Gamma => {
            if let Some(i) = y.iter().position(|v| !v.is_finite() || *v <= T::zero()) {
                return Err(Error::InvalidResponse(format!(
                    "gamma family requires y > 0; y[{i}] = {}",
                    y[i]
                )));
            }
        }
        GlmFamily::Poisson => {
            if let Some(i) = y.iter().position(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::InvalidResponse(format!(
                    "poisson family requires y >= 0; y[{i}] = {}",
                    y[i]
                )));
            }
        }
    }

    let ybar = y.iter().copied().sum::<T>() / T::of_usize(n);
    let mut mu: Vec<T> = match family {
        GlmFamily::Poisson => y.iter().map(|&v| (v + ybar) * T::of(0.5) + T::of(0.1)).collect(),
        GlmFamily::Gamma => y.to_vec(),
    };
    let mut eta: Vec<T> = mu.iter().map(|m| m.ln()).collect();
    let mut deviance = total_deviance(family, y, &mu);
    let mut beta: Option<Vec<T>> = None;
    let mut converged = false;
    let mut iterations = 0;
    let tol = T::of(config.tol);

    for iter in 1..=config.max_iter.max(1) {
        iterations = iter;
        let (w, z): (Vec<T>, Vec<T>) = (0..n)
            .map(|i| working(family, y[i], mu[i], eta[i]))
            .unzip();
        let ne = normal_equations(x, &w, &z);
        let l = cholesky(&ne.xtwx, p).ok_or_else(|| Error::IrlsFailure {
            iterations: iter,
            reason: "singular weighted design matrix".into(),
        })?;
        let mut candidate = cholesky_solve(&l, p, &ne.xtwz);
        if candidate.iter().any(|b| !b.is_finite()) {
            return Err(Error::IrlsFailure {
                iterations: iter,
                reason: "non-finite coefficients".into(),
            });
        }
        let mut new_eta = eta_of(x, &candidate);
        let mut new_mu: Vec<T> = new_eta.iter().map(|e| e.exp()).collect();
        let mut new_dev = total_deviance(family, y, &new_mu);

        if let Some(old) = &beta {
            let slack = deviance.abs() * T::of(1e-12) + T::of(1e-12);
            let mut halvings = 0;
            while !(new_dev.is_finite() && new_dev <= deviance + slack) && halvings < 40 {
                for (c, o) in candidate.iter_mut().zip(old) {
                    *c = (*c + *o) * T::of(0.5);
                }
                new_eta = eta_of(x, &candidate);
                new_mu = new_eta.iter().map(|e| e.exp()).collect();
                new_dev = total_deviance(family, y, &new_mu);
                halvings += 1;
            }
        }

        let change = match &beta {
            Some(old) => candidate
                .iter()
                .zip(old)
                .map(|(a, b)| (*a - *b).abs())
                .fold(T::zero(), T::max),
            None => T::infinity(),
        };
        beta = Some(candidate);
        eta = new_eta;
        mu = new_mu;
        deviance = new_dev;
        if change < tol {
            converged = true;
            break;
        }
    }

    let coefficients = beta.expect("at least one IRLS iteration");
    let dispersion = match family {
        GlmFamily::Poisson => T::one(),
        GlmFamily::Gamma => {
            let pearson: T = y
                .iter()
                .zip(&mu)
                .map(|(&yi, &mi)| {
                    let r = (yi - mi) / mi;
                    r * r
                })
                .sum();
            pearson / T::of_usize(n - p)
        }
    };
    let (w, z): (Vec<T>, Vec<T>) = (0..n)
        .map(|i| working(family, y[i], mu[i], eta[i]))
        .unzip();
    let ne = normal_equations(x, &w, &z);
    let std_errors = match cholesky(&ne.xtwx, p) {
        Some(l) => inverse_diagonal(&l, p)
            .into_iter()
            .map(|v| (v * dispersion).sqrt())
            .collect(),
        None => vec![T::nan(); p],
    };

    Ok(GlmModel {
        family,
        coefficients,
        std_errors,
        dispersion,
        deviance,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Poisson};

    fn intercept_only(n: usize) -> FeatureMatrix<f64> {
        FeatureMatrix::no_columns(n)
    }

    #[test]
    fn intercept_only_gamma_recovers_mean() {
        let x = intercept_only(3);
        let m = fit_glm(&x, &[1.0, 2.0, 3.0], GlmFamily::Gamma, &GlmConfig::default()).unwrap();
        assert!(m.converged);
        assert!((m.coefficients[0].exp() - 2.0).abs() < 1e-8);
        assert!((glm_predict(&m, &[]).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn intercept_only_poisson_recovers_mean() {
        let x = intercept_only(4);
        let m = fit_glm(&x, &[0.0, 1.0, 2.0, 3.0], GlmFamily::Poisson, &GlmConfig::default())
            .unwrap();
        assert!(m.converged);
        assert!((m.coefficients[0].exp() - 1.5).abs() < 1e-8);
    }

    #[test]
    fn zero_coefficients_predict_one() {
        let m = GlmModel::from_coefficients(GlmFamily::Gamma, vec![0.0, 0.0, 0.0], 1.0);
        assert_eq!(glm_predict(&m, &[3.0, -7.0]).unwrap(), 1.0);
    }

    #[test]
    fn two_coefficient_prediction_by_hand() {
        let m = GlmModel::from_coefficients(GlmFamily::Poisson, vec![0.3, -0.2], 1.0);
        // exp(0.3 - 0.2 * 2.5) = exp(-0.2)
        let expected = (-0.2f64).exp();
        assert!((glm_predict(&m, &[2.5]).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(
            glm_predict(&m, &[1.0, 2.0]),
            Err(Error::ArityMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn gamma_simulation_recovers_truth_within_three_se() {
        let (b0, b1, shape) = (1.0, 0.5, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2_000;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = rng.random_range(0.0..2.0);
            let mean = (b0 + b1 * xi).exp();
            y.push(Gamma::new(shape, mean / shape).unwrap().sample(&mut rng));
            rows.push(vec![xi]);
        }
        let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
        let m = fit_glm(&x, &y, GlmFamily::Gamma, &GlmConfig::default()).unwrap();
        assert!(m.converged);
        for (est, (se, truth)) in m.coefficients.iter().zip(m.std_errors.iter().zip([b0, b1])) {
            assert!((est - truth).abs() < 3.0 * se, "{est} vs {truth} (se {se})");
        }
        // dispersion ~ 1 / shape
        assert!((m.dispersion - 0.5).abs() < 0.1, "{}", m.dispersion);
    }

    #[test]
    fn poisson_simulation_recovers_truth_within_three_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3_000;
        let (b0, b1) = (-0.3, 0.8);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let xi: f64 = rng.random_range(-1.0..1.0);
            let lam: f64 = (b0 + b1 * xi).exp();
            y.push(Poisson::new(lam).unwrap().sample(&mut rng));
            rows.push(vec![xi]);
        }
        let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
        let m = fit_glm(&x, &y, GlmFamily::Poisson, &GlmConfig::default()).unwrap();
        assert!(m.converged);
        for (est, (se, truth)) in m.coefficients.iter().zip(m.std_errors.iter().zip([b0, b1])) {
            assert!((est - truth).abs() < 3.0 * se, "{est} vs {truth} (se {se})");
        }
    }

    #[test]
    fn gamma_rejects_nonpositive_response() {
        let x = intercept_only(3);
        let err = fit_glm(&x, &[1.0, 0.0, 3.0], GlmFamily::Gamma, &GlmConfig::default());
        assert!(matches!(err, Err(Error::InvalidResponse(_))));
        let err = fit_glm(&x, &[1.0, -1.0, 3.0], GlmFamily::Poisson, &GlmConfig::default());
        assert!(matches!(err, Err(Error::InvalidResponse(_))));
    }

    #[test]
    fn collinear_design_is_irls_failure() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let err = fit_glm(&x, &y, GlmFamily::Gamma, &GlmConfig::default()).unwrap_err();
        assert!(matches!(err, Error::IrlsFailure { .. }), "{err}");
        assert!(err.to_string().contains("IRLS failure"));
    }

    #[test]
    fn too_few_rows() {
        let x = FeatureMatrix::from_unnamed_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(fit_glm(&x, &[1.0, 2.0], GlmFamily::Gamma, &GlmConfig::default()).is_err());
    }

    #[test]
    fn single_precision_fit() {
        let rows: Vec<Vec<f32>> = (0..50).map(|i| vec![i as f32 / 50.0]).collect();
        let y: Vec<f32> = rows.iter().map(|r| (0.5 + r[0]).exp()).collect();
        let x = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
        let cfg = GlmConfig { max_iter: 50, tol: 1e-5 };
        let m = fit_glm(&x, &y, GlmFamily::Gamma, &cfg).unwrap();
        assert!((m.coefficients[0] - 0.5).abs() < 1e-3);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-3);
    }
}
