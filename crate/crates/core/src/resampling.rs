//! Train/test split plans for the ten performance estimation methods.
//!
//! Every plan indexes embedded rows `0..N` of an estimation set. K-way
//! partitions use base size `floor(N/K)` with the first `N mod K` folds one
//! row larger.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::fraction_floor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("{method}: {rows} rows cannot support {needed} (K={k})")]
    TooFewRows {
        method: Method,
        rows: usize,
        k: usize,
        needed: String,
    },

    #[error("{method}: invalid parameter: {message}")]
    InvalidParameter { method: Method, message: String },

    #[error("{method}: purging left iteration {iteration} with {remaining} training rows (need {needed})")]
    PurgedEmpty {
        method: Method,
        iteration: usize,
        remaining: usize,
        needed: usize,
    },
}

/// The ten estimators, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CV")]
    Cv,
    #[serde(rename = "CV-Bl")]
    CvBlocked,
    #[serde(rename = "CV-Mod")]
    CvModified,
    #[serde(rename = "CV-hvBl")]
    CvHvBlocked,
    #[serde(rename = "Holdout")]
    Holdout,
    #[serde(rename = "Rep-Holdout")]
    RepeatedHoldout,
    #[serde(rename = "Preq-Bls")]
    PreqBlocks,
    #[serde(rename = "Preq-Sld-Bls")]
    PreqSlidingBlocks,
    #[serde(rename = "Preq-Bls-Trim")]
    PreqBlocksTrim,
    #[serde(rename = "Preq-Bls-Gap")]
    PreqBlocksGap,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Cv,
        Method::CvBlocked,
        Method::CvModified,
        Method::CvHvBlocked,
        Method::Holdout,
        Method::RepeatedHoldout,
        Method::PreqBlocks,
        Method::PreqSlidingBlocks,
        Method::PreqBlocksTrim,
        Method::PreqBlocksGap,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Cv => "CV",
            Method::CvBlocked => "CV-Bl",
            Method::CvModified => "CV-Mod",
            Method::CvHvBlocked => "CV-hvBl",
            Method::Holdout => "Holdout",
            Method::RepeatedHoldout => "Rep-Holdout",
            Method::PreqBlocks => "Preq-Bls",
            Method::PreqSlidingBlocks => "Preq-Sld-Bls",
            Method::PreqBlocksTrim => "Preq-Bls-Trim",
            Method::PreqBlocksGap => "Preq-Bls-Gap",
        }
    }

    /// Whether every iteration trains strictly before it tests.
    pub fn is_temporally_ordered(self) -> bool {
        matches!(
            self,
            Method::Holdout
                | Method::RepeatedHoldout
                | Method::PreqBlocks
                | Method::PreqSlidingBlocks
                | Method::PreqBlocksTrim
                | Method::PreqBlocksGap
        )
    }

    /// Expected iteration count for a feasible plan.
    pub fn iteration_count(self, k: usize, trim_keep_fraction: f64) -> usize {
        match self {
            Method::Cv | Method::CvBlocked | Method::CvModified | Method::CvHvBlocked => k,
            Method::Holdout => 1,
            Method::RepeatedHoldout => k,
            Method::PreqBlocks | Method::PreqSlidingBlocks => k - 1,
            Method::PreqBlocksTrim => trim_keep_count(k - 1, trim_keep_fraction),
            Method::PreqBlocksGap => k - 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s.trim())
            .ok_or_else(|| format!("unknown estimator '{s}'"))
    }
}

/// `ceil(fraction * iterations)`, guarded against representation error so
/// that e.g. `0.6 * 5` counts as exactly 3.
pub fn trim_keep_count(iterations: usize, fraction: f64) -> usize {
    let raw = fraction * iterations as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(iterations)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResamplerSpec {
    pub method: Method,
    pub k: usize,
    /// Embedding order, used for purging by CV-Mod and CV-hvBl.
    pub p: usize,
    pub seed: u64,
    /// Holdout training share.
    pub holdout_fraction: f64,
    /// Rep-Holdout training window, as a share of N.
    pub train_fraction: f64,
    /// Rep-Holdout test window, as a share of N.
    pub test_fraction: f64,
    /// Share of Preq-Bls iterations kept by Preq-Bls-Trim.
    pub trim_keep_fraction: f64,
}

impl ResamplerSpec {
    pub fn new(method: Method, k: usize, p: usize, seed: u64) -> Self {
        Self {
            method,
            k,
            p,
            seed,
            holdout_fraction: 0.7,
            train_fraction: 0.6,
            test_fraction: 0.1,
            trim_keep_fraction: 0.6,
        }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Iteration {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPlan {
    pub method: Method,
    pub rows: usize,
    pub iterations: Vec<Iteration>,
    pub params: ResamplerSpec,
}

impl SplitPlan {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Largest row index referenced by any iteration.
    pub fn max_index(&self) -> Option<usize> {
        self.iterations
            .iter()
            .flat_map(|it| it.train.iter().chain(&it.test))
            .copied()
            .max()
    }
}

/// Dispatches to the generator for `spec.method`.
pub fn generate(rows: usize, spec: &ResamplerSpec) -> Result<SplitPlan, PlanError> {
    let iterations = match spec.method {
        Method::Cv => cv_shuffled(rows, spec)?,
        Method::CvBlocked => cv_blocked(rows, spec)?,
        Method::CvModified => cv_modified(rows, spec)?,
        Method::CvHvBlocked => cv_hv_blocked(rows, spec)?,
        Method::Holdout => holdout(rows, spec)?,
        Method::RepeatedHoldout => repeated_holdout(rows, spec)?,
        Method::PreqBlocks => preq_blocks(rows, spec)?,
        Method::PreqSlidingBlocks => preq_sliding_blocks(rows, spec)?,
        Method::PreqBlocksTrim => preq_blocks_trim(rows, spec)?,
        Method::PreqBlocksGap => preq_blocks_gap(rows, spec)?,
    };
    Ok(SplitPlan {
        method: spec.method,
        rows,
        iterations,
        params: *spec,
    })
}

/// Contiguous fold ranges with the remainder spread over the leading folds.
pub fn fold_bounds(rows: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let base = rows / k;
    let extra = rows % k;
    let mut start = 0;
    (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn require_k(rows: usize, spec: &ResamplerSpec, min_k: usize, blocks_per_k: usize) -> Result<(), PlanError> {
    if spec.k < min_k {
        return Err(PlanError::InvalidParameter {
            method: spec.method,
            message: format!("K={} must be at least {min_k}", spec.k),
        });
    }
    if rows < blocks_per_k * spec.k {
        return Err(PlanError::TooFewRows {
            method: spec.method,
            rows,
            k: spec.k,
            needed: format!("at least {blocks_per_k}K rows"),
        });
    }
    Ok(())
}

fn require_p(spec: &ResamplerSpec) -> Result<(), PlanError> {
    if spec.p == 0 {
        return Err(PlanError::InvalidParameter {
            method: spec.method,
            message: "p must be at least 1".into(),
        });
    }
    Ok(())
}

fn require_fraction(spec: &ResamplerSpec, name: &str, value: f64) -> Result<(), PlanError> {
    if !(value > 0.0 && value < 1.0) {
        return Err(PlanError::InvalidParameter {
            method: spec.method,
            message: format!("{name}={value} must lie in (0, 1)"),
        });
    }
    Ok(())
}

/// Each fold tested once against the union of the others.
fn k_fold(order: &[usize], k: usize) -> Vec<Iteration> {
    let bounds = fold_bounds(order.len(), k);
    bounds
        .iter()
        .enumerate()
        .map(|(i, test_range)| {
            let mut test = order[test_range.clone()].to_vec();
            let mut train: Vec<usize> = bounds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, r)| order[r.clone()].iter().copied())
                .collect();
            test.sort_unstable();
            train.sort_unstable();
            Iteration { train, test }
        })
        .collect()
}

fn shuffled_order(rows: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Random permutation split into K folds.
pub fn cv_shuffled(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    Ok(k_fold(&shuffled_order(rows, spec.seed), spec.k))
}

/// K contiguous folds in temporal order.
pub fn cv_blocked(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    let order: Vec<usize> = (0..rows).collect();
    Ok(k_fold(&order, spec.k))
}

/// Shuffled CV with every training row within `p` of a test row removed.
pub fn cv_modified(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    require_p(spec)?;
    let p = spec.p;
    let mut iterations = k_fold(&shuffled_order(rows, spec.seed), spec.k);
    for (i, it) in iterations.iter_mut().enumerate() {
        purge_within(&mut it.train, &it.test, p, rows);
        if it.train.len() < p + 1 {
            return Err(PlanError::PurgedEmpty {
                method: spec.method,
                iteration: i,
                remaining: it.train.len(),
                needed: p + 1,
            });
        }
    }
    Ok(iterations)
}

/// Drops every training row whose index is within `p` of some test row.
pub(crate) fn purge_within(train: &mut Vec<usize>, test: &[usize], p: usize, rows: usize) {
    let mut near_test = vec![false; rows];
    for &t in test {
        let lo = t.saturating_sub(p);
        let hi = (t + p).min(rows - 1);
        near_test[lo..=hi].iter_mut().for_each(|b| *b = true);
    }
    train.retain(|&r| !near_test[r]);
}

/// Blocked CV with `p` rows removed on each side of the test block.
pub fn cv_hv_blocked(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    require_p(spec)?;
    let p = spec.p;
    let bounds = fold_bounds(rows, spec.k);
    bounds
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let lo = block.start.saturating_sub(p);
            let hi = block.end + p;
            let train: Vec<usize> = (0..rows).filter(|&r| r < lo || r >= hi).collect();
            if train.is_empty() {
                return Err(PlanError::PurgedEmpty {
                    method: spec.method,
                    iteration: i,
                    remaining: 0,
                    needed: 1,
                });
            }
            Ok(Iteration {
                train,
                test: block.clone().collect(),
            })
        })
        .collect()
}

/// One split: the leading share trains, the rest tests.
pub fn holdout(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_fraction(spec, "holdout_fraction", spec.holdout_fraction)?;
    if rows < 10 {
        return Err(PlanError::TooFewRows {
            method: spec.method,
            rows,
            k: spec.k,
            needed: "at least 10 rows".into(),
        });
    }
    let cut = fraction_floor(spec.holdout_fraction, rows);
    if cut == 0 || cut >= rows {
        return Err(PlanError::TooFewRows {
            method: spec.method,
            rows,
            k: spec.k,
            needed: "non-empty train and test sides".into(),
        });
    }
    Ok(vec![Iteration {
        train: (0..cut).collect(),
        test: (cut..rows).collect(),
    }])
}

/// K holdouts at uniformly drawn anchors; each trains on the window just
/// before its anchor and tests on the window just after.
pub fn repeated_holdout(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_fraction(spec, "train_fraction", spec.train_fraction)?;
    require_fraction(spec, "test_fraction", spec.test_fraction)?;
    if spec.k < 1 {
        return Err(PlanError::InvalidParameter {
            method: spec.method,
            message: "K must be at least 1".into(),
        });
    }
    let train_len = fraction_floor(spec.train_fraction, rows);
    let test_len = fraction_floor(spec.test_fraction, rows);
    if train_len == 0 || test_len == 0 || train_len + test_len > rows {
        return Err(PlanError::TooFewRows {
            method: spec.method,
            rows,
            k: spec.k,
            needed: "non-empty train and test windows".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.k)
        .map(|_| {
            let anchor = rng.random_range(train_len..=rows - test_len);
            Iteration {
                train: (anchor - train_len..anchor).collect(),
                test: (anchor..anchor + test_len).collect(),
            }
        })
        .collect())
}

/// Growing window: blocks `0..=i` train, block `i+1` tests.
pub fn preq_blocks(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    let bounds = fold_bounds(rows, spec.k);
    Ok((1..spec.k)
        .map(|i| Iteration {
            train: (0..bounds[i].start).collect(),
            test: bounds[i].clone().collect(),
        })
        .collect())
}

/// Sliding window: block `i` trains, block `i+1` tests.
pub fn preq_sliding_blocks(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 2, 2)?;
    let bounds = fold_bounds(rows, spec.k);
    Ok((1..spec.k)
        .map(|i| Iteration {
            train: bounds[i - 1].clone().collect(),
            test: bounds[i].clone().collect(),
        })
        .collect())
}

/// The trailing `ceil(trim_keep_fraction * (K-1))` iterations of Preq-Bls.
pub fn preq_blocks_trim(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_fraction(spec, "trim_keep_fraction", spec.trim_keep_fraction)?;
    let mut full = preq_blocks(rows, spec)?;
    let keep = trim_keep_count(full.len(), spec.trim_keep_fraction);
    if keep == 0 {
        return Err(PlanError::InvalidParameter {
            method: spec.method,
            message: "trim keeps no iterations".into(),
        });
    }
    Ok(full.split_off(full.len() - keep))
}

/// Growing window with one unused block between train and test.
pub fn preq_blocks_gap(rows: usize, spec: &ResamplerSpec) -> Result<Vec<Iteration>, PlanError> {
    require_k(rows, spec, 3, 3)?;
    let bounds = fold_bounds(rows, spec.k);
    Ok((2..spec.k)
        .map(|i| Iteration {
            train: (0..bounds[i - 1].start).collect(),
            test: bounds[i].clone().collect(),
        })
        .collect())
}
