//! Auto-regressive learners and the default model pool.
//!
//! Every learner maps a lag-feature row to a one-step-ahead forecast. The
//! pool is an ordered list of [`LearnerSpec`]s; a spec's position is its
//! registration index, which also breaks ties during selection.

pub mod knn;
pub mod linear;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::data::Matrix;
use knn::KnnModel;
use linear::{ElasticNetOptions, LinearModel};
use tree::{BaggedTrees, BoostedStumps, RegressionTree, TreeOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),

    #[error("feature matrix has no columns")]
    NoFeatures,

    #[error("{features} feature rows but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },

    #[error("training data contains non-finite values")]
    NonFinite,

    #[error("feature width {found} does not match training width {expected}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("invalid pool definition at line {line}: {message}")]
    PoolDefinition { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    /// Last observed value.
    Naive,
    /// Training-target mean.
    Mean,
    Ols,
    Ridge { lambda: f64 },
    ElasticNet { alpha: f64, lambda: f64 },
    Knn { k: usize },
    Tree { max_depth: usize },
    Bagging { trees: usize },
    Boosting { iterations: usize, learning_rate: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Mean => "mean",
            Algorithm::Ols => "ols",
            Algorithm::Ridge { .. } => "ridge",
            Algorithm::ElasticNet { .. } => "elastic_net",
            Algorithm::Knn { .. } => "knn",
            Algorithm::Tree { .. } => "tree",
            Algorithm::Bagging { .. } => "bagging",
            Algorithm::Boosting { .. } => "boosting",
        }
    }

    pub fn hyperparameters(&self) -> BTreeMap<&'static str, f64> {
        let mut h = BTreeMap::new();
        match *self {
            Algorithm::Naive | Algorithm::Mean | Algorithm::Ols => {}
            Algorithm::Ridge { lambda } => {
                h.insert("lambda", lambda);
            }
            Algorithm::ElasticNet { alpha, lambda } => {
                h.insert("alpha", alpha);
                h.insert("lambda", lambda);
            }
            Algorithm::Knn { k } => {
                h.insert("k", k as f64);
            }
            Algorithm::Tree { max_depth } => {
                h.insert("max_depth", max_depth as f64);
            }
            Algorithm::Bagging { trees } => {
                h.insert("trees", trees as f64);
            }
            Algorithm::Boosting {
                iterations,
                learning_rate,
            } => {
                h.insert("iterations", iterations as f64);
                h.insert("learning_rate", learning_rate);
            }
        }
        h
    }

    /// Whether fitting draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Algorithm::Bagging { .. })
    }

    /// Parses `name key=value ...` as used in pool definition files.
    pub fn parse(line: &str) -> Result<Self, String> {
        let mut parts = line.split_whitespace();
        let name = parts.next().ok_or("empty learner definition")?;
        let mut params = BTreeMap::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, found '{part}'"))?;
            let value: f64 = v
                .parse()
                .map_err(|_| format!("cannot parse value '{v}' for '{k}'"))?;
            if !value.is_finite() {
                return Err(format!("non-finite value for '{k}'"));
            }
            if params.insert(k.to_string(), value).is_some() {
                return Err(format!("duplicate key '{k}'"));
            }
        }
        let mut take = |key: &str| params.remove(key).ok_or_else(|| format!("{name}: missing '{key}'"));
        let count = |v: f64, key: &str| -> Result<usize, String> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("{name}: '{key}' must be a positive integer"))
            }
        };
        let algo = match name {
            "naive" => Algorithm::Naive,
            "mean" => Algorithm::Mean,
            "ols" => Algorithm::Ols,
            "ridge" => Algorithm::Ridge {
                lambda: take("lambda")?,
            },
            "elastic_net" => Algorithm::ElasticNet {
                alpha: take("alpha")?,
                lambda: take("lambda")?,
            },
            "knn" => Algorithm::Knn {
                k: count(take("k")?, "k")?,
            },
            "tree" => Algorithm::Tree {
                max_depth: count(take("max_depth")?, "max_depth")?,
            },
            "bagging" => Algorithm::Bagging {
                trees: count(take("trees")?, "trees")?,
            },
            "boosting" => {
                let iterations = take("iterations")?;
                if iterations < 0.0 || iterations.fract() != 0.0 {
                    return Err("boosting: 'iterations' must be a non-negative integer".into());
                }
                Algorithm::Boosting {
                    iterations: iterations as usize,
                    learning_rate: take("learning_rate")?,
                }
            }
            other => return Err(format!("unknown algorithm '{other}'")),
        };
        if let Some(extra) = params.keys().next() {
            return Err(format!("{name}: unexpected key '{extra}'"));
        }
        match algo {
            Algorithm::Ridge { lambda } if lambda < 0.0 => Err("ridge: lambda must be >= 0".into()),
            Algorithm::ElasticNet { alpha, lambda } if !(0.0..=1.0).contains(&alpha) || lambda < 0.0 => {
                Err("elastic_net: need 0 <= alpha <= 1 and lambda >= 0".into())
            }
            Algorithm::Boosting { learning_rate, .. } if learning_rate <= 0.0 => {
                Err("boosting: learning_rate must be > 0".into())
            }
            a => Ok(a),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hyperparameters();
        if h.is_empty() {
            return f.write_str(self.name());
        }
        let args: Vec<String> = h.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.name(), args.join(","))
    }
}

/// One member of the model pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerSpec {
    pub algorithm: Algorithm,
    pub display_name: String,
    pub registration_index: usize,
    /// Seed for stochastic learners.
    pub seed: u64,
}

impl LearnerSpec {
    pub fn hyperparameters(&self) -> BTreeMap<&'static str, f64> {
        let mut h = self.algorithm.hyperparameters();
        if self.algorithm.is_stochastic() {
            h.insert("seed", self.seed as f64);
        }
        h
    }
}

/// Registers algorithms in order; stochastic learners get
/// `pool_seed ^ registration_index`.
pub fn build_pool(algorithms: &[Algorithm], pool_seed: u64) -> Vec<LearnerSpec> {
    algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| LearnerSpec {
            algorithm: *a,
            display_name: a.to_string(),
            registration_index: i,
            seed: pool_seed ^ i as u64,
        })
        .collect()
}

/// The 22 algorithm configurations of the default pool.
pub fn default_algorithms() -> Vec<Algorithm> {
    let mut algos = vec![Algorithm::Naive, Algorithm::Mean, Algorithm::Ols];
    algos.extend([1.0, 10.0].map(|lambda| Algorithm::Ridge { lambda }));
    algos.extend([0.0, 0.25, 0.5, 0.75, 1.0].map(|alpha| Algorithm::ElasticNet { alpha, lambda: 1.0 }));
    algos.extend([1, 3, 7, 15].map(|k| Algorithm::Knn { k }));
    algos.extend([2, 4, 8].map(|max_depth| Algorithm::Tree { max_depth }));
    algos.extend([25, 100].map(|trees| Algorithm::Bagging { trees }));
    algos.extend([10, 50, 100].map(|iterations| Algorithm::Boosting {
        iterations,
        learning_rate: 0.1,
    }));
    algos
}

pub fn default_pool() -> Vec<LearnerSpec> {
    default_pool_seeded(0)
}

pub fn default_pool_seeded(seed: u64) -> Vec<LearnerSpec> {
    build_pool(&default_algorithms(), seed)
}

/// Parses a pool definition: one `algorithm key=value ...` per line,
/// `#` starts a comment. Duplicated configurations are rejected.
pub fn parse_pool(text: &str, pool_seed: u64) -> Result<Vec<LearnerSpec>, LearnerError> {
    let mut algos: Vec<Algorithm> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let algo = Algorithm::parse(line).map_err(|message| LearnerError::PoolDefinition { line: i + 1, message })?;
        if algos.contains(&algo) {
            return Err(LearnerError::PoolDefinition {
                line: i + 1,
                message: format!("duplicate learner '{algo}'"),
            });
        }
        algos.push(algo);
    }
    if algos.is_empty() {
        return Err(LearnerError::PoolDefinition {
            line: 0,
            message: "pool is empty".into(),
        });
    }
    Ok(build_pool(&algos, pool_seed))
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    Naive,
    Constant(f64),
    Linear(LinearModel),
    Knn(KnnModel),
    Tree(RegressionTree),
    Bagged(BaggedTrees),
    Boosted(BoostedStumps),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: LearnerSpec,
    params: Params,
    pub training_rows: usize,
    width: usize,
    /// Set when OLS hit a singular system and used the ridge fallback.
    pub singular_fallback: bool,
}

impl FittedModel {
    /// Linear coefficients `(intercept, slopes)` for linear learners.
    pub fn linear_coefficients(&self) -> Option<(f64, &[f64])> {
        match &self.params {
            Params::Linear(m) => Some((m.intercept, &m.coefficients)),
            _ => None,
        }
    }
}

pub fn fit(spec: &LearnerSpec, features: &Matrix, targets: &[f64]) -> Result<FittedModel, LearnerError> {
    if features.rows() != targets.len() {
        return Err(LearnerError::LengthMismatch {
            features: features.rows(),
            targets: targets.len(),
        });
    }
    if targets.len() < 2 {
        return Err(LearnerError::TooFewRows(targets.len()));
    }
    if features.cols() == 0 {
        return Err(LearnerError::NoFeatures);
    }
    if !features.as_slice().iter().chain(targets).all(|v| v.is_finite()) {
        return Err(LearnerError::NonFinite);
    }
    let mean = || targets.iter().sum::<f64>() / targets.len() as f64;
    let mut singular_fallback = false;
    let params = match spec.algorithm {
        Algorithm::Naive => Params::Naive,
        Algorithm::Mean => Params::Constant(mean()),
        Algorithm::Ols => {
            let (m, flagged) = linear::ols(features, targets);
            singular_fallback = flagged;
            Params::Linear(m)
        }
        Algorithm::Ridge { lambda } => Params::Linear(linear::ridge_or_mean(features, targets, lambda)),
        Algorithm::ElasticNet { alpha, lambda } => Params::Linear(linear::elastic_net(
            features,
            targets,
            &ElasticNetOptions {
                alpha,
                lambda,
                tolerance: 1e-8,
                max_sweeps: 10_000,
            },
        )),
        Algorithm::Knn { k } => Params::Knn(KnnModel::fit(features, targets, k)),
        Algorithm::Tree { max_depth } => Params::Tree(RegressionTree::fit(
            features,
            targets,
            &TreeOptions {
                max_depth: Some(max_depth),
                min_leaf: 1,
            },
        )),
        Algorithm::Bagging { trees } => Params::Bagged(BaggedTrees::fit(features, targets, trees, spec.seed)),
        Algorithm::Boosting {
            iterations,
            learning_rate,
        } => Params::Boosted(BoostedStumps::fit(features, targets, iterations, learning_rate)),
    };
    Ok(FittedModel {
        spec: spec.clone(),
        params,
        training_rows: targets.len(),
        width: features.cols(),
        singular_fallback,
    })
}

pub fn predict(model: &FittedModel, features: &Matrix) -> Result<Vec<f64>, LearnerError> {
    if features.cols() != model.width {
        return Err(LearnerError::WidthMismatch {
            expected: model.width,
            found: features.cols(),
        });
    }
    Ok(features
        .iter_rows()
        .map(|row| match &model.params {
            Params::Naive => row[0],
            Params::Constant(c) => *c,
            Params::Linear(m) => m.predict_row(row),
            Params::Knn(m) => m.predict_row(row),
            Params::Tree(t) => t.predict_row(row),
            Params::Bagged(b) => b.predict_row(row),
            Params::Boosted(b) => b.predict_row(row),
        })
        .collect())
}
