use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use perfest::data::write_csv;
use perfest::harness::report::summarize_records;
use perfest::harness::{
    emit_reports, generate_synthetic, read_runs, run_experiment, ExperimentConfig, ReportBundle, SynthKind,
};

#[derive(Parser)]
#[command(name = "perfest", version, about = "Compare performance estimators for time-series model selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every estimator over a directory of series and write reports.
    Run(RunArgs),
    /// Write a seeded synthetic series as CSV.
    Synth {
        #[arg(long)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild summary reports from an existing runs.jsonl.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        stratify_threshold: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    test_ratio: Option<f64>,
    /// Comma-separated estimator ids.
    #[arg(long)]
    estimators: Option<String>,
    /// Comma-separated aggregation ids.
    #[arg(long)]
    aggregations: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed lag order instead of false nearest neighbors.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    min_length: Option<usize>,
    #[arg(long)]
    stratify_threshold: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Pool definition file.
    #[arg(long)]
    pool: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            config
                .apply_file_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("data_dir", path(&self.data_dir)),
            ("output", path(&self.output)),
            ("k", self.k.map(|v| v.to_string())),
            ("test_ratio", self.test_ratio.map(|v| v.to_string())),
            ("estimators", self.estimators.clone()),
            ("aggregations", self.aggregations.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("min_length", self.min_length.map(|v| v.to_string())),
            ("stratify_threshold", self.stratify_threshold.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("pool", path(&self.pool)),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let bundle = run_experiment(&config)?;
            info!(
                "{} records, {} skipped",
                bundle.records.len(),
                bundle.skips.len()
            );
            println!("wrote {} records", bundle.records.len());
        }
        Command::Synth { kind, n, seed, out } => {
            let series = generate_synthetic(kind, n, seed)?;
            write_csv(&series, &out)?;
        }
        Command::Report {
            runs,
            output,
            stratify_threshold,
        } => {
            let records = read_runs(&runs)?;
            anyhow::ensure!(!records.is_empty(), "{} holds no records", runs.display());
            let bundle = ReportBundle::from_records(records, Vec::new(), stratify_threshold);
            emit_reports(&bundle, &output)?;
            for row in summarize_records(&bundle.records, |_| None) {
                println!(
                    "{:<14} {:<10} accuracy={:.3}",
                    row.estimator.id(),
                    row.aggregation.id(),
                    row.stats.accuracy
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
