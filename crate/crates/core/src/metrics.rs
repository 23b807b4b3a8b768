//! Test-set oracle, selection loss and summary statistics.
//!
//! The oracle model is the pool member with the lowest RMSE on the test
//! part of a partition when fitted on the whole estimation part. An
//! estimator's loss is the percentage by which its chosen model's test RMSE
//! exceeds the oracle's.

use serde::Serialize;
use thiserror::Error;

use crate::data::Partition;
use crate::learners::{self, LearnerSpec};
use crate::resampling::Method;
use crate::selection::{argmin, Aggregation};

/// Relative tolerance under which two test RMSEs count as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("predictions ({predictions}) and actuals ({actuals}) differ in length")]
    LengthMismatch { predictions: usize, actuals: usize },

    #[error("cannot compute a metric over zero values")]
    Empty,

    #[error("non-finite value in metric input")]
    NonFinite,

    #[error("oracle RMSE is zero while the selected model errs ({selected}); loss is undefined")]
    UndefinedLoss { selected: f64 },

    #[error("selected RMSE {selected} is below the oracle RMSE {oracle}")]
    BeatsOracle { selected: f64, oracle: f64 },

    #[error("invalid RMSE value {0}")]
    InvalidRmse(f64),

    #[error("every model failed on the test partition")]
    NoViableModel,
}

pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64, MetricError> {
    if predictions.len() != actuals.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricError::Empty);
    }
    if !predictions.iter().chain(actuals).all(|v| v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let sse: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Test RMSE per pool member; failed models hold `f64::INFINITY`.
    pub per_model_test_rmse: Vec<f64>,
    pub best: LearnerSpec,
    pub best_rmse: f64,
}

/// Fits each model on the estimation part and scores it on the test part.
pub fn oracle_best(pool: &[LearnerSpec], partition: &Partition) -> Result<OracleResult, MetricError> {
    let est = &partition.estimation;
    let test = &partition.test;
    let per_model_test_rmse: Vec<f64> = pool
        .iter()
        .map(|spec| {
            learners::fit(spec, est.features(), est.targets())
                .and_then(|m| learners::predict(&m, test.features()))
                .ok()
                .and_then(|pred| rmse(&pred, test.targets()).ok())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let best = argmin(&per_model_test_rmse).ok_or(MetricError::NoViableModel)?;
    Ok(OracleResult {
        best: pool[best].clone(),
        best_rmse: per_model_test_rmse[best],
        per_model_test_rmse,
    })
}

/// Percentage excess of `rmse_selected` over `rmse_star`, zero within the
/// tie tolerance.
pub fn loss_of_estimator(rmse_selected: f64, rmse_star: f64) -> Result<f64, MetricError> {
    for v in [rmse_selected, rmse_star] {
        if !v.is_finite() || v < 0.0 {
            return Err(MetricError::InvalidRmse(v));
        }
    }
    let diff = rmse_selected - rmse_star;
    if diff.abs() <= TIE_TOLERANCE * rmse_star {
        return Ok(0.0);
    }
    if rmse_star == 0.0 {
        return Err(MetricError::UndefinedLoss {
            selected: rmse_selected,
        });
    }
    if diff < 0.0 {
        return Err(MetricError::BeatsOracle {
            selected: rmse_selected,
            oracle: rmse_star,
        });
    }
    Ok(diff / rmse_star * 100.0)
}

/// Selection quality of one estimator on one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionQuality {
    pub estimator: Method,
    pub aggregation: Aggregation,
    /// `None` when the oracle is perfect but the selection is not.
    pub loss_percent: Option<f64>,
    pub hit: bool,
}

impl SelectionQuality {
    pub fn from_rmse(
        estimator: Method,
        aggregation: Aggregation,
        rmse_selected: f64,
        rmse_star: f64,
    ) -> Result<Self, MetricError> {
        let loss_percent = match loss_of_estimator(rmse_selected, rmse_star) {
            Ok(v) => Some(v),
            Err(MetricError::UndefinedLoss { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            estimator,
            aggregation,
            loss_percent,
            hit: loss_percent == Some(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossStats {
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
}

impl LossStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            median: quantile_sorted(&sorted, 0.5),
            iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub accuracy: f64,
    /// Loss over misses; absent when every selection hit.
    pub al: Option<LossStats>,
    /// Loss over all series with a defined loss.
    pub oal: Option<LossStats>,
    /// Series whose loss was undefined (perfect oracle, imperfect choice).
    pub undefined_loss: usize,
}

pub fn summarize(per_series: &[SelectionQuality]) -> SummaryStats {
    let count = per_series.len();
    let hits = per_series.iter().filter(|q| q.hit).count();
    let miss_losses: Vec<f64> = per_series
        .iter()
        .filter(|q| !q.hit)
        .filter_map(|q| q.loss_percent)
        .collect();
    let all_losses: Vec<f64> = per_series.iter().filter_map(|q| q.loss_percent).collect();
    SummaryStats {
        count,
        accuracy: if count == 0 { 0.0 } else { hits as f64 / count as f64 },
        al: LossStats::from_values(&miss_losses),
        oal: LossStats::from_values(&all_losses),
        undefined_loss: per_series.iter().filter(|q| q.loss_percent.is_none()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{embed, partition, TimeSeries};
    use crate::learners::{build_pool, Algorithm};

    fn q(loss: f64) -> SelectionQuality {
        SelectionQuality::from_rmse(Method::Cv, Aggregation::MeanError, 1.0 + loss / 100.0, 1.0).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]), Ok(0.0));
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), (12.5f64).sqrt());
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.5355339059327378).abs() < 1e-15);
        assert_eq!(rmse(&[2.5, 3.5, 7.5], &[0.0, 1.0, 5.0]), Ok(2.5));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch { .. })));
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_of_estimator(0.7, 0.7), Ok(0.0));
        assert!((loss_of_estimator(1.05, 1.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((loss_of_estimator(0.58, 0.5).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(loss_of_estimator(1.25, 1.0), Ok(25.0));
        assert_eq!(loss_of_estimator(0.75, 0.5), Ok(50.0));
        assert_eq!(loss_of_estimator(1.0 + 1e-14, 1.0), Ok(0.0));
        assert_eq!(loss_of_estimator(0.0, 0.0), Ok(0.0));
        assert!(matches!(loss_of_estimator(0.1, 0.0), Err(MetricError::UndefinedLoss { .. })));
        assert!(matches!(loss_of_estimator(0.9, 1.0), Err(MetricError::BeatsOracle { .. })));
    }

    #[test]
    fn summary_of_two_hits_and_a_miss() {
        let s = summarize(&[q(0.0), q(0.0), q(10.0)]);
        assert_eq!(s.count, 3);
        assert_eq!(s.accuracy, 2.0 / 3.0);
        let al = s.al.unwrap();
        assert!((al.median - 10.0).abs() < 1e-9);
        assert_eq!(s.oal.unwrap().median, 0.0);
    }

    #[test]
    fn summary_with_only_hits() {
        let s = summarize(&[q(0.0), q(0.0)]);
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.al, None);
        assert_eq!(s.oal.unwrap().median, 0.0);
        assert_eq!(s.oal.unwrap().mean, 0.0);
    }

    #[test]
    fn undefined_losses_are_counted_apart() {
        let undefined = SelectionQuality::from_rmse(Method::Cv, Aggregation::MeanError, 0.5, 0.0).unwrap();
        assert!(!undefined.hit);
        let s = summarize(&[undefined, q(0.0)]);
        assert_eq!(s.undefined_loss, 1);
        assert_eq!(s.accuracy, 0.5);
        assert_eq!(s.al, None);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
        let s = LossStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.median, s.iqr, s.mean), (2.5, 1.5, 2.5));
    }

    #[test]
    fn oracle_picks_generating_model() {
        let s = TimeSeries::new("lin", (0..60).map(|i| 3.0 + 0.5 * i as f64).collect()).unwrap();
        let part = partition(&embed(&s, 2).unwrap(), 0.7).unwrap();
        let pool = build_pool(&[Algorithm::Mean, Algorithm::Naive, Algorithm::Ols], 0);
        let o = oracle_best(&pool, &part).unwrap();
        assert_eq!(o.best.registration_index, 2);
        assert!(o.best_rmse < 1e-9);

        let single = build_pool(&[Algorithm::Mean], 0);
        assert_eq!(oracle_best(&single, &part).unwrap().best.registration_index, 0);
    }
}
