//! Estimating the predictive performance of forecasting models on
//! univariate time series, and measuring how well each performance
//! estimator picks the best model from a pool.
//!
//! The pipeline for one series: pick a lag order ([`fnn`]), embed the
//! series ([`data`]), split the embedded rows into estimation and test
//! parts, generate train/test plans over the estimation part
//! ([`resampling`]), score each pool member ([`learners`]) on every plan
//! iteration and pick one ([`selection`]), then compare the pick with the
//! test-set oracle ([`metrics`]). [`harness`] runs this over many series.

pub mod data;
pub mod fnn;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod resampling;
pub mod selection;
