//! Pool evaluation under a split plan, fold aggregation and argmin selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::EmbeddedDataset;
use crate::learners::{self, LearnerSpec};
use crate::metrics::rmse;
use crate::resampling::{Method, SplitPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("plan references row {index} but the dataset has {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },

    #[error("score vector has {scores} entries for a pool of {pool}")]
    LengthMismatch { scores: usize, pool: usize },

    #[error("no viable model: every aggregated score is infinite")]
    NoViableModel,

    #[error("empty score matrix")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Aggregation {
    #[serde(rename = "mean-error")]
    MeanError,
    #[serde(rename = "avg-rank")]
    AverageRank,
}

impl Aggregation {
    pub const ALL: [Aggregation; 2] = [Aggregation::MeanError, Aggregation::AverageRank];

    pub fn id(self) -> &'static str {
        match self {
            Aggregation::MeanError => "mean-error",
            Aggregation::AverageRank => "avg-rank",
        }
    }

    pub fn apply(self, matrix: &FoldScoreMatrix) -> Vec<f64> {
        match self {
            Aggregation::MeanError => aggregate_mean(matrix),
            Aggregation::AverageRank => aggregate_rank(matrix),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Aggregation::ALL
            .into_iter()
            .find(|a| a.id() == s.trim())
            .ok_or_else(|| format!("unknown aggregation '{s}'"))
    }
}

/// A fit or prediction that failed inside one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFailure {
    pub model: usize,
    pub iteration: usize,
    pub reason: String,
}

/// Per-model, per-iteration RMSE. Failed cells hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScoreMatrix {
    scores: Vec<Vec<f64>>,
    pub failures: Vec<FoldFailure>,
    /// Number of model fits attempted while filling the matrix.
    pub fit_count: usize,
}

impl FoldScoreMatrix {
    /// Builds a matrix from rows of scores (one row per model).
    pub fn from_rows(scores: Vec<Vec<f64>>) -> Result<Self, SelectionError> {
        let cols = scores.first().map_or(0, Vec::len);
        if cols == 0 || scores.iter().any(|r| r.len() != cols) {
            return Err(SelectionError::Empty);
        }
        Ok(Self {
            scores,
            failures: Vec::new(),
            fit_count: 0,
        })
    }

    pub fn metric(&self) -> &'static str {
        "RMSE"
    }

    pub fn models(&self) -> usize {
        self.scores.len()
    }

    pub fn iterations(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    pub fn row(&self, model: usize) -> &[f64] {
        &self.scores[model]
    }

    pub fn get(&self, model: usize, iteration: usize) -> f64 {
        self.scores[model][iteration]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scores: self
                .scores
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
            failures: self.failures.clone(),
            fit_count: self.fit_count,
        }
    }
}

/// Fits every pool member on each iteration's training rows and scores it
/// by RMSE on the iteration's test rows.
pub fn evaluate_pool(
    pool: &[LearnerSpec],
    data: &EmbeddedDataset,
    plan: &SplitPlan,
) -> Result<FoldScoreMatrix, SelectionError> {
    if let Some(index) = plan.max_index().filter(|&i| i >= data.len()) {
        return Err(SelectionError::IndexOutOfRange {
            index,
            rows: data.len(),
        });
    }
    let mut scores = vec![Vec::with_capacity(plan.len()); pool.len()];
    let mut failures = Vec::new();
    let mut fit_count = 0;
    for (iteration, it) in plan.iterations.iter().enumerate() {
        let train = data.select(&it.train);
        let test = data.select(&it.test);
        for (model, spec) in pool.iter().enumerate() {
            fit_count += 1;
            let score = learners::fit(spec, train.features(), train.targets())
                .and_then(|m| learners::predict(&m, test.features()))
                .map_err(|e| e.to_string())
                .and_then(|pred| {
                    if pred.iter().all(|v| v.is_finite()) {
                        rmse(&pred, test.targets()).map_err(|e| e.to_string())
                    } else {
                        Err("non-finite prediction".to_string())
                    }
                });
            match score {
                Ok(v) => scores[model].push(v),
                Err(reason) => {
                    scores[model].push(f64::INFINITY);
                    failures.push(FoldFailure {
                        model,
                        iteration,
                        reason,
                    });
                }
            }
        }
    }
    Ok(FoldScoreMatrix {
        scores,
        failures,
        fit_count,
    })
}

/// Row-wise arithmetic mean.
pub fn aggregate_mean(matrix: &FoldScoreMatrix) -> Vec<f64> {
    matrix
        .scores
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect()
}

/// Ranks of `values` in ascending order, 1-based, ties sharing the average
/// of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Mean over iterations of each model's within-iteration rank.
pub fn aggregate_rank(matrix: &FoldScoreMatrix) -> Vec<f64> {
    let models = matrix.models();
    let iterations = matrix.iterations();
    let mut totals = vec![0.0; models];
    for it in 0..iterations {
        let column: Vec<f64> = (0..models).map(|m| matrix.get(m, it)).collect();
        for (t, r) in totals.iter_mut().zip(average_ranks(&column)) {
            *t += r;
        }
    }
    totals.iter().map(|t| t / iterations as f64).collect()
}

/// Index of the smallest finite score; ties go to the lowest index.
pub fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        if best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub chosen: LearnerSpec,
    pub aggregated: Vec<f64>,
    pub aggregation: Aggregation,
    pub estimator: Method,
}

pub fn select(
    aggregated: Vec<f64>,
    pool: &[LearnerSpec],
    aggregation: Aggregation,
    estimator: Method,
) -> Result<SelectionOutcome, SelectionError> {
    if aggregated.len() != pool.len() {
        return Err(SelectionError::LengthMismatch {
            scores: aggregated.len(),
            pool: pool.len(),
        });
    }
    let best = argmin(&aggregated).ok_or(SelectionError::NoViableModel)?;
    Ok(SelectionOutcome {
        chosen: pool[best].clone(),
        aggregated,
        aggregation,
        estimator,
    })
}
