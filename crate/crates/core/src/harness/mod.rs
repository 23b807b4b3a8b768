//! Experiment driver: synthetic data, configuration, the per-series
//! pipeline and report output.

pub mod config;
pub mod experiment;
pub mod report;
pub mod synth;

use std::path::Path;

use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{
    load_pool, load_series_dir, run_experiment, run_on_series, run_series, ExperimentRun, RunRecord, SeriesRun,
    SkipRecord,
};
pub use report::{emit_reports, read_runs, ReportBundle};
pub use synth::{generate_synthetic, SynthError, SynthKind};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Pool(#[from] crate::learners::LearnerError),

    #[error(transparent)]
    Synth(#[from] SynthError),

    #[error(transparent)]
    Data(#[from] crate::data::DataError),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("no *.csv series found in {0}")]
    NoSeries(String),

    #[error("no series produced a result ({0} skipped)")]
    AllSeriesFailed(usize),

    #[error("report: {0}")]
    Report(String),

    #[error("worker pool: {0}")]
    Worker(String),
}

impl HarnessError {
    pub fn io(path: &Path, error: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: error.to_string(),
        }
    }
}
