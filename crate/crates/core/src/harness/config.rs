//! Experiment configuration.
//!
//! Config files are flat `key = value` text, one pair per line, `#` starting
//! a comment. Keys mirror the `run` flags:
//!
//! | key                  | value                                   |
//! |----------------------|-----------------------------------------|
//! | `data_dir`           | directory of `*.csv` series             |
//! | `output`             | report directory                        |
//! | `k`                  | folds / repetitions (default 10)        |
//! | `test_ratio`         | held-out share (default 0.3)            |
//! | `estimators`         | comma-separated estimator ids           |
//! | `aggregations`       | comma-separated `mean-error`,`avg-rank` |
//! | `seed`               | unsigned integer                        |
//! | `p`                  | fixed lag order, bypasses FNN           |
//! | `min_length`         | shortest accepted series (default 30)   |
//! | `stratify_threshold` | sample-size stratum split (default 1000)|
//! | `workers`            | series processed in parallel            |
//! | `pool`               | pool definition file (see `learners`)   |

use std::path::PathBuf;

use thiserror::Error;

use crate::data::MIN_SERIES_LEN;
use crate::resampling::Method;
use crate::selection::Aggregation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },

    #[error("unknown config key '{0}'")]
    UnknownKey(String),

    #[error("invalid value '{value}' for '{key}': {message}")]
    InvalidValue {
        key: String,
        value: String,
        message: String,
    },

    #[error("missing required setting '{0}'")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub k: usize,
    pub test_ratio: f64,
    pub estimators: Vec<Method>,
    pub aggregations: Vec<Aggregation>,
    pub seed: u64,
    pub p_override: Option<usize>,
    pub min_length: usize,
    pub stratify_threshold: usize,
    pub workers: usize,
    pub pool_file: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            output_dir: None,
            k: 10,
            test_ratio: 0.3,
            estimators: Method::ALL.to_vec(),
            aggregations: Aggregation::ALL.to_vec(),
            seed: 0,
            p_override: None,
            min_length: MIN_SERIES_LEN,
            stratify_threshold: 1000,
            workers: 1,
            pool_file: None,
        }
    }
}

fn parse_list<T: std::str::FromStr<Err = String>>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let item = part.parse::<T>().map_err(|message| ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            message,
        })?;
        out.push(item);
    }
    if out.is_empty() {
        return Err(ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            message: "list is empty".into(),
        });
    }
    Ok(out)
}

fn first_occurrences<T: PartialEq>(list: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(list.len());
    for item in list {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let invalid = |message: &str| ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            message: message.into(),
        };
        let integer = || value.parse::<usize>().map_err(|_| invalid("expected a non-negative integer"));
        match key.trim() {
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "output" | "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "k" => self.k = integer()?,
            "test_ratio" => {
                self.test_ratio = value.parse().map_err(|_| invalid("expected a real number"))?;
            }
            "estimators" => {
                self.estimators = first_occurrences(parse_list::<Method>(key, value)?);
            }
            "aggregations" => {
                self.aggregations = first_occurrences(parse_list::<Aggregation>(key, value)?);
            }
            "seed" => self.seed = value.parse().map_err(|_| invalid("expected an unsigned integer"))?,
            "p" => self.p_override = Some(integer()?),
            "min_length" => self.min_length = integer()?,
            "stratify_threshold" => self.stratify_threshold = integer()?,
            "workers" => self.workers = integer()?,
            "pool" => self.pool_file = Some(PathBuf::from(value)),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies every setting of a config file over the current values.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, value: String, message: &str| ConfigError::InvalidValue {
            key: key.into(),
            value,
            message: message.into(),
        };
        if self.k < 2 {
            return Err(invalid("k", self.k.to_string(), "must be at least 2"));
        }
        if !(self.test_ratio > 0.0 && self.test_ratio < 1.0) {
            return Err(invalid("test_ratio", self.test_ratio.to_string(), "must lie in (0, 1)"));
        }
        if self.p_override == Some(0) {
            return Err(invalid("p", "0".into(), "must be at least 1"));
        }
        if self.min_length < MIN_SERIES_LEN {
            return Err(invalid(
                "min_length",
                self.min_length.to_string(),
                "cannot be below the embedding minimum of 30",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experimental_design() {
        let c = ExperimentConfig::default();
        assert_eq!(c.k, 10);
        assert_eq!(c.test_ratio, 0.3);
        assert_eq!(c.estimators.len(), 10);
        assert_eq!(c.aggregations.len(), 2);
        assert_eq!(c.stratify_threshold, 1000);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_settings_apply_in_order() {
        let mut c = ExperimentConfig::default();
        c.apply_file_text(
            "# settings\nk = 5\nestimators = CV, Holdout, CV\naggregations=avg-rank\nseed = 42\np = 3\n\noutput = out # here\n",
        )
        .unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.estimators, vec![Method::Cv, Method::Holdout]);
        assert_eq!(c.aggregations, vec![Aggregation::AverageRank]);
        assert_eq!(c.seed, 42);
        assert_eq!(c.p_override, Some(3));
        assert_eq!(c.output_dir, Some(PathBuf::from("out")));
        // a later override wins
        c.set("k", "7").unwrap();
        assert_eq!(c.k, 7);
    }

    #[test]
    fn rejects_bad_settings() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.apply_file_text("k 5"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(c.set("colour", "red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(c.set("estimators", "CV,LOO"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(c.set("k", "-1"), Err(ConfigError::InvalidValue { .. })));
        c.set("test_ratio", "1.5").unwrap();
        assert!(c.validate().is_err());
    }
}
