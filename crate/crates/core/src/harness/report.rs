//! Report files written after a run.
//!
//! * `runs.jsonl`: one [`RunRecord`] per line.
//! * `summary.csv`: accuracy, AL and OAL per `(estimator, aggregation)`.
//! * `strata.csv`: the same, split at the sample-size threshold.
//! * `timing.csv`: wall time and fit count per estimator.
//! * `skipped.csv`: series or estimators that produced no record.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::experiment::{RunRecord, SkipRecord};
use super::HarnessError;
use crate::metrics::{quantile_sorted, summarize, LossStats, SelectionQuality, SummaryStats};
use crate::resampling::Method;
use crate::selection::Aggregation;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Method,
    pub aggregation: Aggregation,
    /// `None` for the pooled summary.
    pub stratum: Option<String>,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub estimator: Method,
    pub series: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
    pub mean_fit_count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub records: Vec<RunRecord>,
    pub skips: Vec<SkipRecord>,
    pub summary: Vec<SummaryRow>,
    pub strata: Vec<SummaryRow>,
    pub timing: Vec<TimingRow>,
    pub stratify_threshold: usize,
}

fn quality(r: &RunRecord) -> SelectionQuality {
    SelectionQuality {
        estimator: r.estimator,
        aggregation: r.aggregation,
        loss_percent: r.loss_percent,
        hit: r.hit,
    }
}

pub fn stratum_label(n: usize, threshold: usize) -> String {
    if n < threshold {
        format!("n<{threshold}")
    } else {
        format!("n>={threshold}")
    }
}

/// Summary per `(estimator, aggregation)`, optionally keyed by a stratum.
pub fn summarize_records(
    records: &[RunRecord],
    stratum: impl Fn(&RunRecord) -> Option<String>,
) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, Aggregation, Option<String>), Vec<SelectionQuality>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.estimator, r.aggregation, stratum(r)))
            .or_default()
            .push(quality(r));
    }
    groups
        .into_iter()
        .map(|((estimator, aggregation, stratum), qs)| SummaryRow {
            estimator,
            aggregation,
            stratum,
            stats: summarize(&qs),
        })
        .collect()
}

/// Wall time per estimator, counting each series once.
pub fn timing_rows(records: &[RunRecord]) -> Vec<TimingRow> {
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<Method, Vec<(f64, usize)>> = BTreeMap::new();
    for r in records {
        if seen.insert((r.series_id.clone(), r.estimator)) {
            groups
                .entry(r.estimator)
                .or_default()
                .push((r.wall_time_seconds, r.fit_count));
        }
    }
    groups
        .into_iter()
        .map(|(estimator, entries)| {
            let mut times: Vec<f64> = entries.iter().map(|e| e.0).collect();
            times.sort_by(f64::total_cmp);
            let count = times.len() as f64;
            TimingRow {
                estimator,
                series: times.len(),
                min: times[0],
                q25: quantile_sorted(&times, 0.25),
                median: quantile_sorted(&times, 0.5),
                q75: quantile_sorted(&times, 0.75),
                max: times[times.len() - 1],
                mean: times.iter().sum::<f64>() / count,
                mean_fit_count: entries.iter().map(|e| e.1 as f64).sum::<f64>() / count,
            }
        })
        .collect()
}

impl ReportBundle {
    pub fn from_records(records: Vec<RunRecord>, skips: Vec<SkipRecord>, stratify_threshold: usize) -> Self {
        let summary = summarize_records(&records, |_| None);
        let strata = summarize_records(&records, |r| Some(stratum_label(r.n, stratify_threshold)));
        let timing = timing_rows(&records);
        Self {
            records,
            skips,
            summary,
            strata,
            timing,
            stratify_threshold,
        }
    }

    pub fn summary_for(&self, estimator: Method, aggregation: Aggregation) -> Option<&SummaryStats> {
        self.summary
            .iter()
            .find(|row| row.estimator == estimator && row.aggregation == aggregation)
            .map(|row| &row.stats)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn loss_fields(stats: Option<LossStats>) -> [String; 3] {
    [
        opt(stats.map(|s| s.median)),
        opt(stats.map(|s| s.iqr)),
        opt(stats.map(|s| s.mean)),
    ]
}

const SUMMARY_HEADER: [&str; 11] = [
    "estimator",
    "aggregation",
    "count",
    "accuracy",
    "al_median",
    "al_iqr",
    "al_mean",
    "oal_median",
    "oal_iqr",
    "oal_mean",
    "undefined_loss",
];

fn summary_fields(row: &SummaryRow) -> Vec<String> {
    let s = &row.stats;
    let mut out = vec![
        row.estimator.id().to_string(),
        row.aggregation.id().to_string(),
        s.count.to_string(),
        s.accuracy.to_string(),
    ];
    out.extend(loss_fields(s.al));
    out.extend(loss_fields(s.oal));
    out.push(s.undefined_loss.to_string());
    out
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Report(format!("{}: {e}", path.display()))
}

pub fn write_runs(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| HarnessError::Report(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Report(format!("{}:{}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(summary_fields(row)).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_strata(rows: &[SummaryRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["stratum"];
    header.extend(SUMMARY_HEADER);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        let mut fields = vec![row.stratum.clone().unwrap_or_default()];
        fields.extend(summary_fields(row));
        w.write_record(fields).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_timing(rows: &[TimingRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "estimator",
        "series",
        "min_seconds",
        "q25_seconds",
        "median_seconds",
        "q75_seconds",
        "max_seconds",
        "mean_seconds",
        "mean_fit_count",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.estimator.id().to_string(),
            r.series.to_string(),
            r.min.to_string(),
            r.q25.to_string(),
            r.median.to_string(),
            r.q75.to_string(),
            r.max.to_string(),
            r.mean.to_string(),
            r.mean_fit_count.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_skips(skips: &[SkipRecord], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(["series_id", "estimator", "reason", "detail"])
        .map_err(csv_err(path))?;
    for s in skips {
        w.write_record([
            s.series_id.as_str(),
            s.estimator.map(Method::id).unwrap_or(""),
            s.reason,
            s.detail.as_str(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_reports(bundle: &ReportBundle, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_runs(&bundle.records, &dir.join("runs.jsonl"))?;
    write_summary(&bundle.summary, &dir.join("summary.csv"))?;
    write_strata(&bundle.strata, &dir.join("strata.csv"))?;
    write_timing(&bundle.timing, &dir.join("timing.csv"))?;
    write_skips(&bundle.skips, &dir.join("skipped.csv"))
}
