//! Random partition of row indices into training, calibration and test parts.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Disjoint training (I₁), calibration (I₂) and held-out test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    train: Vec<usize>,
    calibration: Vec<usize>,
    test: Vec<usize>,
}

impl SplitIndices {
    /// Builds a split from explicit parts, rejecting any overlap.
    pub fn from_parts(train: Vec<usize>, calibration: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let mut all: Vec<usize> = train
            .iter()
            .chain(&calibration)
            .chain(&test)
            .copied()
            .collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidProportions(
                "training, calibration and test index sets must be disjoint".into(),
            ));
        }
        Ok(Self {
            train,
            calibration,
            test,
        })
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn calibration(&self) -> &[usize] {
        &self.calibration
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    /// Calibration size n₂.
    pub fn n2(&self) -> usize {
        self.calibration.len()
    }

    /// Training ∪ calibration, sorted; the training pool of the out-of-bag method.
    pub fn train_and_calibration(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.train.iter().chain(&self.calibration).copied().collect();
        v.sort_unstable();
        v
    }
}

/// Part sizes by largest-remainder rounding of `n * proportions`.
///
/// Ties among equal remainders go to the earlier part.
pub fn split_sizes(n: usize, proportions: [f64; 3]) -> Result<[usize; 3]> {
    if proportions.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::InvalidProportions(format!(
            "proportions must be positive, got {proportions:?}"
        )));
    }
    let total: f64 = proportions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProportions(format!(
            "proportions must sum to 1, got {total}"
        )));
    }
    if n < 3 {
        return Err(Error::DegenerateSplit { n, sizes: [0; 3] });
    }
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        // Guard against 2500.0000000001-style products.
        *s = (e + 1e-9).floor() as usize;
    }
    let mut remaining = n - sizes.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        sizes[i] += 1;
        remaining -= 1;
    }
    if sizes.contains(&0) {
        return Err(Error::DegenerateSplit { n, sizes });
    }
    Ok(sizes)
}

/// Uniformly random partition of `0..n` into (train, calibration, test).
///
/// Deterministic given `seed`; each part is returned in increasing order.
pub fn random_split(n: usize, proportions: [f64; 3], seed: u64) -> Result<SplitIndices> {
    let sizes = split_sizes(n, proportions)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut train = idx[..sizes[0]].to_vec();
    let mut calibration = idx[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let mut test = idx[sizes[0] + sizes[1]..].to_vec();
    train.sort_unstable();
    calibration.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        calibration,
        test,
    })
}
