//! CART regression trees, bagged ensembles and gradient-boosted stumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted regression tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

/// Row indices sorted by each feature's value, one list per feature.
fn presort(x: &Matrix, rows: &[usize]) -> Vec<Vec<usize>> {
    (0..x.cols())
        .map(|feature| {
            let mut order = rows.to_vec();
            order.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)));
            order
        })
        .collect()
}

impl RegressionTree {
    pub fn fit(x: &Matrix, y: &[f64], opts: &TreeOptions) -> Self {
        let rows: Vec<usize> = (0..y.len()).collect();
        Self::fit_rows(x, y, &rows, opts)
    }

    /// Fits on a multiset of row indices (bootstrap samples repeat rows).
    pub fn fit_rows(x: &Matrix, y: &[f64], rows: &[usize], opts: &TreeOptions) -> Self {
        Self::fit_presorted(x, y, presort(x, rows), opts)
    }

    fn fit_presorted(x: &Matrix, y: &[f64], sorted: Vec<Vec<usize>>, opts: &TreeOptions) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow(x, y, sorted, 0, opts);
        tree
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// `sorted[f]` holds the node's rows ordered by feature `f`.
    fn grow(&mut self, x: &Matrix, y: &[f64], sorted: Vec<Vec<usize>>, depth: usize, opts: &TreeOptions) -> usize {
        let id = self.nodes.len();
        let rows = &sorted[0];
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf(mean));

        let depth_left = opts.max_depth.is_none_or(|d| depth < d);
        if !depth_left || rows.len() < 2 * opts.min_leaf.max(1) {
            return id;
        }
        let Some(split) = best_split(x, y, &sorted, opts.min_leaf.max(1)) else {
            return id;
        };
        let goes_left = |r: &usize| x.get(*r, split.feature) <= split.threshold;
        let (left, right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .into_iter()
            .map(|order| order.into_iter().partition(goes_left))
            .unzip();
        let left = self.grow(x, y, left, depth + 1, opts);
        let right = self.grow(x, y, right, depth + 1, opts);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Exhaustive search for the split with the largest squared-error
/// reduction. Features are scanned in index order and thresholds in
/// ascending order; only a strictly better split replaces the incumbent.
fn best_split(x: &Matrix, y: &[f64], sorted: &[Vec<usize>], min_leaf: usize) -> Option<SplitChoice> {
    let n = sorted[0].len();
    let total: f64 = sorted[0].iter().map(|&r| y[r]).sum();
    let parent_score = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;

    for (feature, order) in sorted.iter().enumerate() {
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += y[order[i]];
            let nl = i + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let lo = x.get(order[i], feature);
            let hi = x.get(order[i + 1], feature);
            if lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64;
            let gain = score - parent_score;
            if gain <= 1e-12 * parent_score.abs().max(1e-300) {
                continue;
            }
            if best.is_none_or(|(g, _, _)| gain > g) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((gain, feature, threshold));
            }
        }
    }

    best.map(|(_, feature, threshold)| SplitChoice { feature, threshold })
}

/// Bootstrap-aggregated unpruned trees.
#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTrees {
    trees: Vec<RegressionTree>,
}

/// Minimum leaf size for bagged trees.
pub const BAGGING_MIN_LEAF: usize = 5;

impl BaggedTrees {
    pub fn fit(x: &Matrix, y: &[f64], trees: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = y.len();
        let opts = TreeOptions {
            max_depth: None,
            min_leaf: BAGGING_MIN_LEAF,
        };
        let all: Vec<usize> = (0..n).collect();
        let full = presort(x, &all);
        let mut counts = vec![0usize; n];
        let trees = (0..trees)
            .map(|_| {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                let sorted = full
                    .iter()
                    .map(|order| {
                        order
                            .iter()
                            .flat_map(|&r| std::iter::repeat_n(r, counts[r]))
                            .collect()
                    })
                    .collect();
                RegressionTree::fit_presorted(x, y, sorted, &opts)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Squared-loss gradient boosting with depth-one trees.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedStumps {
    init: f64,
    learning_rate: f64,
    stumps: Vec<RegressionTree>,
}

impl BoostedStumps {
    pub fn fit(x: &Matrix, y: &[f64], iterations: usize, learning_rate: f64) -> Self {
        let init = y.iter().sum::<f64>() / y.len() as f64;
        let mut fitted = vec![init; y.len()];
        let opts = TreeOptions {
            max_depth: Some(1),
            min_leaf: 1,
        };
        let mut stumps = Vec::with_capacity(iterations);
        let mut residual = vec![0.0; y.len()];
        let all: Vec<usize> = (0..y.len()).collect();
        let sorted = presort(x, &all);
        for _ in 0..iterations {
            for ((r, t), f) in residual.iter_mut().zip(y).zip(&fitted) {
                *r = t - f;
            }
            let stump = RegressionTree::fit_presorted(x, &residual, sorted.clone(), &opts);
            for (i, f) in fitted.iter_mut().enumerate() {
                *f += learning_rate * stump.predict_row(x.row(i));
            }
            stumps.push(stump);
        }
        Self {
            init,
            learning_rate,
            stumps,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.init
            + self
                .stumps
                .iter()
                .map(|s| self.learning_rate * s.predict_row(row))
                .sum::<f64>()
    }
}
