//! The per-series model selection pipeline and the experiment driver.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{emit_reports, ReportBundle};
use super::HarnessError;
use crate::data::{self, embed, partition, TimeSeries, MIN_EMBEDDED_ROWS};
use crate::fnn::{select_embedding_dimension, FnnConfig};
use crate::learners::{self, LearnerSpec};
use crate::metrics::{oracle_best, SelectionQuality};
use crate::resampling::{self, Method, ResamplerSpec};
use crate::selection::{evaluate_pool, select, Aggregation};

/// One `(series, estimator, aggregation)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub series_id: String,
    pub n: usize,
    pub p: usize,
    pub estimator: Method,
    pub aggregation: Aggregation,
    pub chosen_model: String,
    pub oracle_model: String,
    pub chosen_test_rmse: f64,
    pub oracle_test_rmse: f64,
    pub loss_percent: Option<f64>,
    pub hit: bool,
    pub wall_time_seconds: f64,
    pub fit_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipRecord {
    pub series_id: String,
    pub estimator: Option<Method>,
    pub reason: &'static str,
    pub detail: String,
}

impl SkipRecord {
    fn series(id: &str, reason: &'static str, detail: impl Into<String>) -> Self {
        Self {
            series_id: id.to_string(),
            estimator: None,
            reason,
            detail: detail.into(),
        }
    }
}

/// Row ranges touched by one estimator's plan, for leakage auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanAudit {
    pub estimator: Method,
    pub iterations: usize,
    pub max_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRun {
    pub series_id: String,
    pub n: usize,
    pub p: usize,
    /// Embedded rows in the estimation part; test rows start here.
    pub estimation_rows: usize,
    pub test_rows: usize,
    pub records: Vec<RunRecord>,
    pub audits: Vec<PlanAudit>,
    pub skips: Vec<SkipRecord>,
}

impl SeriesRun {
    /// Plans never reach past the estimation rows.
    pub fn leakage_violations(&self) -> usize {
        self.audits
            .iter()
            .filter(|a| a.max_index.is_some_and(|m| m >= self.estimation_rows))
            .count()
    }
}

/// Stable 64-bit FNV-1a, used to derive per-series seeds.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed used for the split plans of a series.
pub fn series_seed(config_seed: u64, series_id: &str) -> u64 {
    config_seed ^ fnv1a(series_id)
}

/// Lag order for a series: the override, or FNN on the estimation share of
/// the raw values (the held-out tail is never read).
pub fn choose_lag(series: &TimeSeries, config: &ExperimentConfig) -> Result<usize, SkipRecord> {
    let n = series.len();
    let max_p = n.saturating_sub(MIN_EMBEDDED_ROWS);
    if let Some(p) = config.p_override {
        if p > max_p {
            return Err(SkipRecord::series(
                series.id(),
                "embedding",
                format!("p={p} too large for n={n}"),
            ));
        }
        return Ok(p);
    }
    let head_len = data::fraction_floor(1.0 - config.test_ratio, n);
    let head = series
        .head(head_len)
        .map_err(|e| SkipRecord::series(series.id(), "too_short", e.to_string()))?;
    let fnn = FnnConfig::for_length(head.len());
    let sel = select_embedding_dimension(&head, &fnn);
    Ok(sel.p.min(max_p).max(1))
}

/// Runs every configured estimator on one series.
pub fn run_series(series: &TimeSeries, config: &ExperimentConfig, pool: &[LearnerSpec]) -> Result<SeriesRun, SkipRecord> {
    let id = series.id();
    let n = series.len();
    if n < config.min_length {
        return Err(SkipRecord::series(
            id,
            "too_short",
            format!("{n} values, minimum {}", config.min_length),
        ));
    }
    if series.std_dev() == 0.0 {
        return Err(SkipRecord::series(id, "zero_variance", "constant series"));
    }
    let p = choose_lag(series, config)?;
    let embedded = embed(series, p).map_err(|e| SkipRecord::series(id, "embedding", e.to_string()))?;
    let part = partition(&embedded, 1.0 - config.test_ratio)
        .map_err(|e| SkipRecord::series(id, "partition", e.to_string()))?;
    let oracle = oracle_best(pool, &part).map_err(|e| SkipRecord::series(id, "oracle", e.to_string()))?;

    let seed = series_seed(config.seed, id);
    let estimation_rows = part.estimation.len();
    let mut run = SeriesRun {
        series_id: id.to_string(),
        n,
        p,
        estimation_rows,
        test_rows: part.test.len(),
        records: Vec::new(),
        audits: Vec::new(),
        skips: Vec::new(),
    };

    for &method in &config.estimators {
        let skip = |reason: &'static str, detail: String| SkipRecord {
            series_id: id.to_string(),
            estimator: Some(method),
            reason,
            detail,
        };
        let started = Instant::now();
        let spec = ResamplerSpec::new(method, config.k, p, seed);
        let plan = match resampling::generate(estimation_rows, &spec) {
            Ok(plan) => plan,
            Err(e) => {
                run.skips.push(skip("plan", e.to_string()));
                continue;
            }
        };
        run.audits.push(PlanAudit {
            estimator: method,
            iterations: plan.len(),
            max_index: plan.max_index(),
        });
        let matrix = match evaluate_pool(pool, &part.estimation, &plan) {
            Ok(m) => m,
            Err(e) => {
                run.skips.push(skip("evaluation", e.to_string()));
                continue;
            }
        };
        let shared_time = started.elapsed().as_secs_f64();

        for &aggregation in &config.aggregations {
            let agg_started = Instant::now();
            let outcome = match select(aggregation.apply(&matrix), pool, aggregation, method) {
                Ok(o) => o,
                Err(e) => {
                    run.skips.push(skip("selection", e.to_string()));
                    continue;
                }
            };
            let wall_time_seconds = shared_time + agg_started.elapsed().as_secs_f64();
            let chosen = outcome.chosen.registration_index;
            let chosen_test_rmse = oracle.per_model_test_rmse[chosen];
            let quality = match SelectionQuality::from_rmse(method, aggregation, chosen_test_rmse, oracle.best_rmse) {
                Ok(q) => q,
                Err(e) => {
                    run.skips.push(skip("scoring", e.to_string()));
                    continue;
                }
            };
            run.records.push(RunRecord {
                series_id: id.to_string(),
                n,
                p,
                estimator: method,
                aggregation,
                chosen_model: outcome.chosen.display_name.clone(),
                oracle_model: oracle.best.display_name.clone(),
                chosen_test_rmse,
                oracle_test_rmse: oracle.best_rmse,
                loss_percent: quality.loss_percent,
                hit: quality.hit,
                wall_time_seconds,
                fit_count: matrix.fit_count,
            });
        }
    }
    if run.leakage_violations() > 0 {
        return Err(SkipRecord::series(id, "leakage", "a split plan indexed test rows"));
    }
    Ok(run)
}

/// Result of running the experiment over a set of series.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub runs: Vec<SeriesRun>,
    pub skips: Vec<SkipRecord>,
}

impl ExperimentRun {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().flat_map(|r| r.records.iter().cloned()).collect()
    }

    pub fn all_skips(&self) -> Vec<SkipRecord> {
        let mut out = self.skips.clone();
        out.extend(self.runs.iter().flat_map(|r| r.skips.iter().cloned()));
        out
    }
}

pub fn load_pool(config: &ExperimentConfig) -> Result<Vec<LearnerSpec>, HarnessError> {
    match &config.pool_file {
        None => Ok(learners::default_pool_seeded(config.seed)),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Ok(learners::parse_pool(&text, config.seed)?)
        }
    }
}

/// Runs the pipeline over in-memory series, `config.workers` at a time.
/// Output order follows input order.
pub fn run_on_series(
    series: &[TimeSeries],
    config: &ExperimentConfig,
    pool: &[LearnerSpec],
) -> Result<ExperimentRun, HarnessError> {
    config.validate()?;
    let work = |s: &TimeSeries| {
        let r = run_series(s, config, pool);
        match &r {
            Ok(run) => info!("{}: n={} p={} records={}", run.series_id, run.n, run.p, run.records.len()),
            Err(skip) => warn!("skipping {}: {} ({})", skip.series_id, skip.reason, skip.detail),
        }
        r
    };
    let results: Vec<Result<SeriesRun, SkipRecord>> = if config.workers <= 1 {
        series.iter().map(work).collect()
    } else {
        let threads = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| HarnessError::Worker(e.to_string()))?;
        threads.install(|| series.par_iter().map(work).collect())
    };
    let mut out = ExperimentRun {
        runs: Vec::new(),
        skips: Vec::new(),
    };
    for r in results {
        match r {
            Ok(run) => out.runs.push(run),
            Err(skip) => out.skips.push(skip),
        }
    }
    Ok(out)
}

/// Reads every `*.csv` in `dir`, sorted by file name. Unreadable files are
/// returned as skips.
pub fn load_series_dir(dir: &Path) -> Result<(Vec<TimeSeries>, Vec<SkipRecord>), HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let mut series = Vec::new();
    let mut skips = Vec::new();
    for path in paths {
        match data::load_csv(&path) {
            Ok(s) => series.push(s),
            Err(e) => {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let reason = match e {
                    data::DataError::TooShort { .. } => "too_short",
                    _ => "unreadable",
                };
                warn!("skipping {}: {e}", path.display());
                skips.push(SkipRecord::series(&id, reason, e.to_string()));
            }
        }
    }
    Ok((series, skips))
}

/// Loads `config.data_dir`, runs every series and writes the reports into
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle, HarnessError> {
    config.validate()?;
    let data_dir = config.data_dir.as_deref().ok_or(HarnessError::Config(
        super::config::ConfigError::Missing("data_dir"),
    ))?;
    let output_dir = config.output_dir.as_deref().ok_or(HarnessError::Config(
        super::config::ConfigError::Missing("output"),
    ))?;
    let pool = load_pool(config)?;
    let (series, load_skips) = load_series_dir(data_dir)?;
    if series.is_empty() && load_skips.is_empty() {
        return Err(HarnessError::NoSeries(data_dir.display().to_string()));
    }
    let mut run = run_on_series(&series, config, &pool)?;
    run.skips.splice(0..0, load_skips);
    let records = run.records();
    if records.is_empty() {
        return Err(HarnessError::AllSeriesFailed(run.all_skips().len()));
    }
    let bundle = ReportBundle::from_records(records, run.all_skips(), config.stratify_threshold);
    emit_reports(&bundle, output_dir)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_synthetic, SynthKind};
    use crate::learners::default_pool;

    #[test]
    fn records_per_series_and_fit_counts() {
        let s = generate_synthetic(SynthKind::Ar, 200, 3).unwrap();
        let config = ExperimentConfig {
            p_override: Some(2),
            ..ExperimentConfig::default()
        };
        let run = run_series(&s, &config, &default_pool()).unwrap();
        assert_eq!(run.records.len(), 20);
        assert_eq!(run.leakage_violations(), 0);
        let fits = |m: Method| run.records.iter().find(|r| r.estimator == m).unwrap().fit_count;
        assert_eq!(fits(Method::Cv), 220);
        assert_eq!(fits(Method::Holdout), 22);
        assert_eq!(fits(Method::PreqBlocksTrim), 132);
    }

    #[test]
    fn skips_constant_and_short_series() {
        let config = ExperimentConfig::default();
        let flat = TimeSeries::new("flat", vec![1.0; 50]).unwrap();
        assert_eq!(run_series(&flat, &config, &default_pool()).unwrap_err().reason, "zero_variance");
        let strict = ExperimentConfig {
            min_length: 100,
            ..ExperimentConfig::default()
        };
        let s = generate_synthetic(SynthKind::Noise, 60, 1).unwrap();
        assert_eq!(run_series(&s, &strict, &default_pool()).unwrap_err().reason, "too_short");
    }

    #[test]
    fn lag_override_is_bounded() {
        let s = generate_synthetic(SynthKind::Noise, 40, 1).unwrap();
        let config = ExperimentConfig {
            p_override: Some(31),
            ..ExperimentConfig::default()
        };
        assert_eq!(choose_lag(&s, &config).unwrap_err().reason, "embedding");
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
