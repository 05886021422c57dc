//! CART regression trees grown greedily on squared error.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, Regressor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartConfig {
    /// Minimum number of (bootstrap-weighted) samples in each child.
    pub min_leaf: usize,
    /// `None` grows until the leaf-size limit or purity stops it.
    pub max_depth: Option<usize>,
    /// Features sampled per split; `None` tries all of them.
    pub mtry: Option<usize>,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            min_leaf: 5,
            max_depth: None,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node<T> {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: T,
        left: u32,
        right: u32,
    },
    Leaf {
        value: T,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartTree<T> {
    nodes: Vec<Node<T>>,
    n_features: usize,
}

impl<T: Scalar> CartTree<T> {
    /// A single-leaf tree predicting `value`.
    pub fn constant(value: T, n_features: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { value, count: 0 }],
            n_features,
        }
    }

    /// Tree from an explicit node arena rooted at index 0.
    pub fn from_nodes(nodes: Vec<Node<T>>, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Empty("tree nodes"));
        }
        for node in &nodes {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                if *feature as usize >= n_features
                    || *left as usize >= nodes.len()
                    || *right as usize >= nodes.len()
                {
                    return Err(Error::InvalidConfig("malformed tree node".into()));
                }
            }
        }
        Ok(Self { nodes, n_features })
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Index of the leaf reached by `x`.
    pub fn leaf_index(&self, x: &[T]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

impl<T: Scalar> Regressor<T> for CartTree<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_unchecked(&self, x: &[T]) -> T {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }
}

/// Fits a tree on all rows of `(x, y)`.
pub fn fit_cart<T: Scalar, R: Rng + ?Sized>(
    x: &FeatureMatrix<T>,
    y: &[T],
    config: &CartConfig,
    rng: &mut R,
) -> Result<CartTree<T>> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    let sample: Vec<usize> = (0..y.len()).collect();
    fit_on_sample(x, y, sample, config, rng)
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    gain: T,
}

/// Grows a tree on a multiset of row indices (duplicates act as weights).
pub(crate) fn fit_on_sample<T: Scalar, R: Rng + ?Sized>(
    x: &FeatureMatrix<T>,
    y: &[T],
    mut sample: Vec<usize>,
    config: &CartConfig,
    rng: &mut R,
) -> Result<CartTree<T>> {
    if sample.is_empty() {
        return Err(Error::Empty("training sample"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidResponse(format!("non-finite response at row {i}")));
    }
    let p = x.n_cols();
    let min_leaf = config.min_leaf.max(1);
    let mtry = config.mtry.unwrap_or(p).clamp(1, p.max(1));

    let mut nodes: Vec<Node<T>> = vec![Node::Leaf {
        value: T::zero(),
        count: 0,
    }];
    // (node id, start, end, depth) over `sample`
    let mut stack = vec![(0usize, 0usize, sample.len(), 0usize)];
    let mut pairs: Vec<(T, T)> = Vec::with_capacity(sample.len());

    while let Some((id, start, end, depth)) = stack.pop() {
        let rows = &sample[start..end];
        let m = rows.len();
        let mean = rows.iter().map(|&i| y[i]).sum::<T>() / T::of_usize(m);
        let sse: T = rows
            .iter()
            .map(|&i| {
                let d = y[i] - mean;
                d * d
            })
            .sum();
        let pure = rows.iter().all(|&i| y[i] == y[rows[0]]);
        let leaf = Node::Leaf {
            value: if pure { y[rows[0]] } else { mean },
            count: m as u32,
        };
        let depth_exhausted = config.max_depth.is_some_and(|d| depth >= d);
        if m < 2 * min_leaf || depth_exhausted || pure || sse <= T::zero() || p == 0 {
            nodes[id] = leaf;
            continue;
        }

        let features: Vec<usize> = if mtry >= p {
            (0..p).collect()
        } else {
            let mut f = index::sample(rng, p, mtry).into_vec();
            f.sort_unstable();
            f
        };

        let mut best: Option<Candidate<T>> = None;
        for &f in &features {
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (x.get(i, f), y[i] - mean)));
            pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let total: T = pairs.iter().map(|p| p.1).sum();
            let mut left_sum = T::zero();
            for k in 1..m {
                left_sum += pairs[k - 1].1;
                if k < min_leaf || m - k < min_leaf || pairs[k - 1].0 >= pairs[k].0 {
                    continue;
                }
                let nl = T::of_usize(k);
                let nr = T::of_usize(m - k);
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let (a, b) = (pairs[k - 1].0, pairs[k].0);
                    let mut threshold = a + (b - a) * T::of(0.5);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }

        let improves = best
            .as_ref()
            .is_some_and(|b| b.gain > sse * T::of(1e-12) && b.gain > T::zero());
        let Some(split) = best.filter(|_| improves) else {
            nodes[id] = leaf;
            continue;
        };

        let slice = &mut sample[start..end];
        let mut lo = 0;
        for k in 0..slice.len() {
            if x.get(slice[k], split.feature) <= split.threshold {
                slice.swap(lo, k);
                lo += 1;
            }
        }
        debug_assert!(lo > 0 && lo < m);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(leaf);
        nodes.push(leaf);
        nodes[id] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: left as u32,
            right: right as u32,
        };
        stack.push((right, start + lo, end, depth + 1));
        stack.push((left, start, start + lo, depth + 1));
    }

    Ok(CartTree {
        nodes,
        n_features: p,
    })
}
