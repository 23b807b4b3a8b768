//! Independent checks shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use perfest::learners::{self, LearnerSpec};
use perfest::resampling::{Method, PlanError, ResamplerSpec, SplitPlan};

/// Fold lengths under the remainder rule, computed without the library.
pub fn fold_lengths(rows: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| rows / k + usize::from(i < rows % k)).collect()
}

fn fold_starts(rows: usize, k: usize) -> Vec<usize> {
    let mut starts = vec![0];
    for len in fold_lengths(rows, k) {
        starts.push(starts.last().unwrap() + len);
    }
    starts
}

/// `ceil(3(K-1)/5)` in integers.
pub fn trim_keep(k: usize) -> usize {
    (3 * (k - 1)).div_ceil(5)
}

pub fn expected_iterations(method: Method, k: usize) -> usize {
    match method {
        Method::Cv | Method::CvBlocked | Method::CvModified | Method::CvHvBlocked => k,
        Method::Holdout => 1,
        Method::RepeatedHoldout => k,
        Method::PreqBlocks | Method::PreqSlidingBlocks => k - 1,
        Method::PreqBlocksTrim => trim_keep(k),
        Method::PreqBlocksGap => k - 2,
    }
}

fn contiguous(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[1] == w[0] + 1)
}

/// Checks every structural property a plan must satisfy.
pub fn check_plan(plan: &SplitPlan, spec: &ResamplerSpec, rows: usize) -> Result<(), String> {
    let k = spec.k;
    let p = spec.p;
    let method = spec.method;
    let fail = |msg: String| Err(format!("{method} N={rows} K={k} p={p} seed={}: {msg}", spec.seed));

    if plan.method != method {
        return fail("method mismatch".into());
    }
    let want = expected_iterations(method, k);
    if plan.iterations.len() != want {
        return fail(format!("{} iterations, expected {want}", plan.iterations.len()));
    }
    for (i, it) in plan.iterations.iter().enumerate() {
        if it.train.is_empty() || it.test.is_empty() {
            return fail(format!("iteration {i} has an empty side"));
        }
        let train: BTreeSet<usize> = it.train.iter().copied().collect();
        let test: BTreeSet<usize> = it.test.iter().copied().collect();
        if train.len() != it.train.len() || test.len() != it.test.len() {
            return fail(format!("iteration {i} repeats an index"));
        }
        if !train.is_disjoint(&test) {
            return fail(format!("iteration {i} overlaps"));
        }
        if train.iter().chain(&test).any(|&r| r >= rows) {
            return fail(format!("iteration {i} indexes past N"));
        }
        if method.is_temporally_ordered() && train.last() >= test.first() {
            return fail(format!("iteration {i} trains after it tests"));
        }
    }

    let starts = fold_starts(rows, k);
    let block = |b: usize| -> Vec<usize> { (starts[b]..starts[b + 1]).collect() };
    let partition_of_rows = |plan: &SplitPlan| {
        let mut all: Vec<usize> = plan.iterations.iter().flat_map(|it| it.test.clone()).collect();
        all.sort_unstable();
        all == (0..rows).collect::<Vec<_>>()
    };

    match method {
        Method::Cv | Method::CvModified => {
            if !partition_of_rows(plan) {
                return fail("test sets do not partition the rows".into());
            }
            let mut sizes: Vec<usize> = plan.iterations.iter().map(|it| it.test.len()).collect();
            let mut want = fold_lengths(rows, k);
            sizes.sort_unstable();
            want.sort_unstable();
            if sizes != want {
                return fail("fold sizes break the remainder rule".into());
            }
            for (i, it) in plan.iterations.iter().enumerate() {
                let near = |r: usize| it.test.iter().any(|&t| r.abs_diff(t) <= p);
                if method == Method::Cv {
                    if it.train.len() + it.test.len() != rows {
                        return fail(format!("iteration {i} drops rows"));
                    }
                } else {
                    if it.train.iter().any(|&r| near(r)) {
                        return fail(format!("iteration {i} keeps a row within p of a test row"));
                    }
                    let kept = (0..rows).filter(|&r| !near(r)).count();
                    if kept != it.train.len() {
                        return fail(format!("iteration {i} purges too much"));
                    }
                    if it.train.len() < p + 1 {
                        return fail(format!("iteration {i} has fewer than p+1 train rows"));
                    }
                }
            }
        }
        Method::CvBlocked | Method::CvHvBlocked => {
            if !partition_of_rows(plan) {
                return fail("test sets do not partition the rows".into());
            }
            for (i, it) in plan.iterations.iter().enumerate() {
                if it.test != block(i) {
                    return fail(format!("iteration {i} does not test block {i}"));
                }
                let (lo, hi) = (starts[i], starts[i + 1]);
                let keep = |r: usize| {
                    if method == Method::CvBlocked {
                        !(lo..hi).contains(&r)
                    } else {
                        r + p < lo || r >= hi + p
                    }
                };
                let want: Vec<usize> = (0..rows).filter(|&r| keep(r)).collect();
                if it.train != want {
                    return fail(format!("iteration {i} train set is wrong"));
                }
            }
        }
        Method::Holdout => {
            let cut = rows * 7 / 10;
            let it = &plan.iterations[0];
            if it.train != (0..cut).collect::<Vec<_>>() || it.test != (cut..rows).collect::<Vec<_>>() {
                return fail("holdout split is not 70/30".into());
            }
        }
        Method::RepeatedHoldout => {
            let (tr, te) = (rows * 6 / 10, rows / 10);
            for (i, it) in plan.iterations.iter().enumerate() {
                let anchor = it.test[0];
                if it.train.len() != tr || it.test.len() != te {
                    return fail(format!("iteration {i} window sizes"));
                }
                if !contiguous(&it.train) || !contiguous(&it.test) || it.train[tr - 1] + 1 != anchor {
                    return fail(format!("iteration {i} windows are not adjacent runs"));
                }
                if anchor < tr || anchor > rows - te {
                    return fail(format!("iteration {i} anchor {anchor} out of range"));
                }
            }
        }
        Method::PreqBlocks | Method::PreqSlidingBlocks | Method::PreqBlocksTrim | Method::PreqBlocksGap => {
            let (first_test, gap) = match method {
                Method::PreqBlocksTrim => (k - trim_keep(k), 0),
                Method::PreqBlocksGap => (2, 1),
                _ => (1, 0),
            };
            for (i, it) in plan.iterations.iter().enumerate() {
                let b = first_test + i;
                if it.test != block(b) {
                    return fail(format!("iteration {i} does not test block {b}"));
                }
                let want: Vec<usize> = if method == Method::PreqSlidingBlocks {
                    block(b - 1)
                } else {
                    (0..starts[b - gap]).collect()
                };
                if it.train != want {
                    return fail(format!("iteration {i} train set is wrong"));
                }
            }
        }
    }
    Ok(())
}

/// Whether a plan error is the one the preconditions call for.
pub fn error_is_justified(err: &PlanError, spec: &ResamplerSpec, rows: usize) -> bool {
    let k = spec.k;
    let p = spec.p;
    match spec.method {
        Method::Cv | Method::CvBlocked | Method::PreqBlocks | Method::PreqSlidingBlocks | Method::PreqBlocksTrim => {
            rows < 2 * k
        }
        Method::PreqBlocksGap => rows < 3 * k || k < 3,
        Method::Holdout => rows < 10,
        Method::RepeatedHoldout => rows * 6 / 10 == 0 || rows / 10 == 0,
        Method::CvHvBlocked => {
            rows < 2 * k || {
                let starts = fold_starts(rows, k);
                (0..k).any(|i| (0..rows).all(|r| !(r + p < starts[i] || r >= starts[i + 1] + p)))
            }
        }
        Method::CvModified => {
            rows < 2 * k || matches!(err, PlanError::PurgedEmpty { remaining, needed, .. } if remaining < needed && *needed == p + 1)
        }
    }
}

/// Design matrix of lagged values (most recent lag first) built directly
/// from the raw values.
pub fn lagged_rows(values: &[f64], p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = (p..values.len())
        .map(|t| (1..=p).map(|j| values[t - j]).collect())
        .collect();
    (rows, values[p..].to_vec())
}

/// Fits every pool member on the leading `ratio` share of lagged rows, scores on the
/// rest, and returns the first index with the lowest test RMSE.
pub fn brute_force_oracle(pool: &[LearnerSpec], values: &[f64], p: usize, ratio: f64) -> (usize, Vec<f64>) {
    let (x, y) = lagged_rows(values, p);
    let cut = (ratio * 1000.0).round() as usize * y.len() / 1000;
    let train = perfest::data::Matrix::from_rows(&x[..cut]);
    let test = perfest::data::Matrix::from_rows(&x[cut..]);
    let scores: Vec<f64> = pool
        .iter()
        .map(|spec| match learners::fit(spec, &train, &y[..cut]) {
            Ok(model) => {
                let pred = learners::predict(&model, &test).unwrap();
                let sse: f64 = pred.iter().zip(&y[cut..]).map(|(a, b)| (a - b).powi(2)).sum();
                let r = (sse / pred.len() as f64).sqrt();
                if r.is_finite() {
                    r
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        })
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    (best, scores)
}
