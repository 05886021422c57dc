//! Bagged CART ensembles (random forests) that keep their bootstrap draws,
//! so the out-of-bag sub-forest of any training row can be recovered
//! without refitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{fit_on_sample, CartConfig, CartTree};
use super::{check_arity, FeatureMatrix, Regressor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `max(1, p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// When false every tree sees each row exactly once (no OOB rows).
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 1000,
            mtry: None,
            min_leaf: 5,
            max_depth: None,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn with_trees(n_trees: usize, seed: u64) -> Self {
        Self {
            n_trees,
            seed,
            ..Self::default()
        }
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or((p / 3).max(1)).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest<T> {
    trees: Vec<CartTree<T>>,
    /// Per tree, the sorted multiset of training rows drawn for it.
    inbag: Vec<Vec<u32>>,
    n_train: usize,
    n_features: usize,
    mtry: usize,
    seed: u64,
}

/// Per-tree RNG stream; independent of how trees are scheduled on threads.
fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Fits `n_trees` CART trees, each on its own bootstrap resample of size n.
pub fn fit_forest<T: Scalar>(x: &FeatureMatrix<T>, y: &[T], config: &ForestConfig) -> Result<Forest<T>> {
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
    }
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n == 0 {
        return Err(Error::Empty("training rows"));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidDataset("too many rows for a forest".into()));
    }
    let p = x.n_cols();
    let mtry = config.resolved_mtry(p);
    let cart = CartConfig {
        min_leaf: config.min_leaf,
        max_depth: config.max_depth,
        mtry: Some(mtry),
    };
    let fitted: Vec<(CartTree<T>, Vec<u32>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|j| {
            let mut rng = tree_rng(config.seed, j);
            let mut draws: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            draws.sort_unstable();
            let inbag: Vec<u32> = draws.iter().map(|&i| i as u32).collect();
            let tree = fit_on_sample(x, y, draws, &cart, &mut rng)?;
            Ok((tree, inbag))
        })
        .collect::<Result<_>>()?;
    let (trees, inbag) = fitted.into_iter().unzip();
    Ok(Forest {
        trees,
        inbag,
        n_train: n,
        n_features: p,
        mtry,
        seed: config.seed,
    })
}

impl<T: Scalar> Forest<T> {
    /// Assembles a forest from trees and their recorded in-bag draws
    /// (0-based row indices, duplicates allowed).
    pub fn from_parts(trees: Vec<CartTree<T>>, inbag: Vec<Vec<usize>>, n_train: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        }
        if trees.len() != inbag.len() {
            return Err(Error::LengthMismatch {
                left: trees.len(),
                right: inbag.len(),
            });
        }
        let n_features = trees[0].n_features();
        if trees.iter().any(|t| t.n_features() != n_features) {
            return Err(Error::InvalidConfig("trees disagree on feature arity".into()));
        }
        let mut records = Vec::with_capacity(inbag.len());
        for draws in inbag {
            if draws.len() != n_train || draws.iter().any(|&i| i >= n_train) {
                return Err(Error::InvalidConfig(format!(
                    "in-bag record must hold {n_train} draws from 0..{n_train}"
                )));
            }
            let mut v: Vec<u32> = draws.into_iter().map(|i| i as u32).collect();
            v.sort_unstable();
            records.push(v);
        }
        Ok(Self {
            trees,
            inbag: records,
            n_train,
            n_features,
            mtry: n_features,
            seed: 0,
        })
    }

    pub fn trees(&self) -> &[CartTree<T>] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted in-bag draws of tree `j`.
    pub fn inbag(&self, j: usize) -> &[u32] {
        &self.inbag[j]
    }

    pub fn is_inbag(&self, row: usize, tree: usize) -> bool {
        self.inbag[tree].binary_search(&(row as u32)).is_ok()
    }

    /// Trees whose bootstrap sample excluded training row `i`.
    pub fn oob_indices(&self, i: usize) -> Vec<usize> {
        (0..self.trees.len()).filter(|&j| !self.is_inbag(i, j)).collect()
    }

    /// Mean prediction over the out-of-bag sub-forest of training row `i`.
    pub fn oob_predict(&self, i: usize, x_i: &[T]) -> Result<T> {
        check_arity(self.n_features, x_i.len())?;
        if i >= self.n_train {
            return Err(Error::InvalidDataset(format!(
                "training row {i} out of range ({})",
                self.n_train
            )));
        }
        let oob = self.oob_indices(i);
        if oob.is_empty() {
            return Err(Error::NoOobTrees { row: i, forest: "forest" });
        }
        let sum: T = oob.iter().map(|&j| self.trees[j].predict_unchecked(x_i)).sum();
        Ok(sum / T::of_usize(oob.len()))
    }

    /// Out-of-bag predictions for every training row; `x` must be the
    /// training matrix in its original row order.
    pub fn oob_predict_all(&self, x: &FeatureMatrix<T>) -> Result<Vec<T>> {
        check_arity(self.n_features, x.n_cols())?;
        if x.n_rows() != self.n_train {
            return Err(Error::LengthMismatch {
                left: self.n_train,
                right: x.n_rows(),
            });
        }
        let masks: Vec<Vec<bool>> = self
            .inbag
            .par_iter()
            .map(|draws| {
                let mut m = vec![false; self.n_train];
                for &i in draws {
                    m[i as usize] = true;
                }
                m
            })
            .collect();
        (0..self.n_train)
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mut sum = T::zero();
                let mut count = 0usize;
                for (tree, mask) in self.trees.iter().zip(&masks) {
                    if !mask[i] {
                        sum += tree.predict_unchecked(row);
                        count += 1;
                    }
                }
                if count == 0 {
                    Err(Error::NoOobTrees { row: i, forest: "forest" })
                } else {
                    Ok(sum / T::of_usize(count))
                }
            })
            .collect()
    }

    /// Mean over rows of the fraction of trees for which the row is out of bag.
    pub fn oob_fraction(&self) -> f64 {
        let b = self.trees.len();
        let n = self.n_train;
        let inbag_pairs: usize = self
            .inbag
            .iter()
            .map(|draws| {
                let mut distinct = draws.clone();
                distinct.dedup();
                distinct.len()
            })
            .sum();
        (b * n - inbag_pairs) as f64 / (b * n) as f64
    }
}

impl<T: Scalar> Regressor<T> for Forest<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_unchecked(&self, x: &[T]) -> T {
        let sum: T = self.trees.iter().map(|t| t.predict_unchecked(x)).sum();
        sum / T::of_usize(self.trees.len())
    }
}

/// Mean over all B trees.
pub fn forest_predict<T: Scalar>(forest: &Forest<T>, x: &[T]) -> Result<T> {
    forest.predict(x)
}
