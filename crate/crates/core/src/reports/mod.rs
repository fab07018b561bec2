//! Result files: CSV, gnuplot script and run manifest.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod plot;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::{self, ExperimentConfig, ExperimentKind, KsResult, MonteCarloReport, Scenario};
use crate::Error;

pub use config::{parse_config, Overrides};
pub use manifest::RunManifest;

/// Experiments that write result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ergodic,
    Variance,
    KsCheck,
    CorrCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ergodic => "ergodic",
            Command::Variance => "variance",
            Command::KsCheck => "ks-check",
            Command::CorrCheck => "corr-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunResult {
    Report(MonteCarloReport),
    Ks(Vec<KsResult>),
    /// `(beta, trials, correlation)`.
    Correlation(Vec<(f64, usize, f64)>),
}

impl RunResult {
    pub fn csv(&self) -> String {
        match self {
            RunResult::Report(r) => csv::report_csv(r),
            RunResult::Ks(r) => csv::ks_csv(r),
            RunResult::Correlation(r) => csv::correlation_csv(r),
        }
    }

    pub fn plot_script(&self, csv_name: &str) -> Option<String> {
        match self {
            RunResult::Report(r) => Some(plot::plot_script(r.kind, csv_name)),
            _ => None,
        }
    }
}

pub fn execute(command: Command, config: &ExperimentConfig) -> Result<RunResult, Error> {
    config.validate()?;
    match command {
        Command::Ergodic => Ok(RunResult::Report(harness::run_ergodic_experiment(config)?)),
        Command::Variance => Ok(RunResult::Report(harness::run_variance_experiment(config)?)),
        Command::KsCheck => {
            let sc = Scenario::from_config(config)?;
            let results = config
                .beta_grid
                .iter()
                .map(|&b| harness::distribution_equivalence_check(&sc, b, config.trials, config.master_seed))
                .collect::<Result<_, _>>()?;
            Ok(RunResult::Ks(results))
        }
        Command::CorrCheck => {
            let sc = Scenario::from_config(config)?;
            let aed = sc.profile.aed().replicated(config.replication_l);
            let rows = config
                .beta_grid
                .iter()
                .map(|&b| {
                    harness::correlation_check(&aed, b, config.trials, config.master_seed)
                        .map(|r| (b, config.trials, r))
                })
                .collect::<Result<_, _>>()?;
            Ok(RunResult::Correlation(rows))
        }
    }
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenRun {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub csv_path: PathBuf,
    pub plot_path: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<command>.csv`, `<command>.gp` (experiments with a plot) and
/// `<command>.manifest.json` into `out_dir`, creating it if needed.
pub fn write_run(
    command: Command,
    config: &ExperimentConfig,
    result: &RunResult,
    out_dir: &Path,
) -> Result<WrittenRun, Error> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = command.name();
    let csv_name = format!("{stem}.csv");
    let csv_path = out_dir.join(&csv_name);
    write_file(&csv_path, &result.csv())?;
    let mut outputs = vec![csv_name.clone()];

    let plot_path = match result.plot_script(&csv_name) {
        Some(script) => {
            let name = format!("{stem}.gp");
            let path = out_dir.join(&name);
            write_file(&path, &script)?;
            outputs.push(name);
            Some(path)
        }
        None => None,
    };

    let manifest = RunManifest::new(command, config, outputs);
    let manifest_path = out_dir.join(format!("{stem}.manifest.json"));
    write_file(&manifest_path, &manifest.to_json())?;
    Ok(WrittenRun { manifest, manifest_path, csv_path, plot_path })
}

/// Outcome of re-running a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub manifest: RunManifest,
    pub result: RunResult,
    pub written: WrittenRun,
    /// Whether the regenerated CSV equals the one beside the manifest;
    /// `None` when that file is missing.
    pub matches_original: Option<bool>,
}

/// Re-runs the experiment recorded in `manifest_path` and writes fresh
/// outputs into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<Replay, Error> {
    let manifest = RunManifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let original = match manifest.csv_path(dir) {
        Some(p) if p.exists() => Some(std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?),
        _ => None,
    };
    let result = execute(manifest.command, &manifest.config)?;
    let matches_original = original.map(|o| o == result.csv());
    let written = write_run(manifest.command, &manifest.config, &result, out_dir)?;
    Ok(Replay { manifest, result, written, matches_original })
}

impl From<ExperimentKind> for Command {
    fn from(k: ExperimentKind) -> Self {
        match k {
            ExperimentKind::Ergodic => Command::Ergodic,
            ExperimentKind::Variance => Command::Variance,
        }
    }
}
