use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use stealthrmt_core::grid_io::{self, CaseSource, MeasurementConfig};
use stealthrmt_core::harness::{ConfigError, CostForm, ExperimentConfig, MonteCarloReport};
use stealthrmt_core::reports::{self, Command, Overrides, RunResult};
use stealthrmt_core::rmt::LogdetVariant;
use stealthrmt_core::{Error, ErrorKind};

/// Stealth data-injection attacks learned from finitely many samples.
#[derive(Parser)]
#[command(name = "stealthrmt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo ergodic cost against the asymptotic curve.
    Ergodic(ExperimentArgs),
    /// Monte Carlo cost variance against the variance bounds.
    Variance(ExperimentArgs),
    /// KS test between the direct and equivalent cost forms.
    KsCheck(ExperimentArgs),
    /// Correlation between the two random terms of the cost.
    CorrCheck(ExperimentArgs),
    /// Print a summary of a grid case.
    ParseCase {
        #[arg(long, default_value = "ieee30")]
        case: String,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ieee30, ieee118 or a MATPOWER file.
    #[arg(long)]
    case: Option<String>,
    /// Correlation decay of the state covariance.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Comma-separated sample ratios.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replication factor of the eigenvalue profile (equivalent form).
    #[arg(long)]
    l: Option<usize>,
    /// as-printed, squared or real.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<LogdetVariant>,
    /// direct or equivalent.
    #[arg(long, value_parser = parse_form)]
    form: Option<CostForm>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_variant(s: &str) -> Result<LogdetVariant, String> {
    LogdetVariant::from_name(s).ok_or_else(|| format!("unknown variant '{s}' (as-printed, squared, real)"))
}

fn parse_form(s: &str) -> Result<CostForm, String> {
    CostForm::from_name(s).ok_or_else(|| format!("unknown form '{s}' (direct, equivalent)"))
}

impl ExperimentArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            case_source: self.case.clone(),
            decay_r: self.r,
            snr_db: self.snr_db,
            beta_grid: self.beta.clone(),
            trials: self.trials,
            master_seed: self.seed,
            replication_l: self.l,
            logdet_variant: self.variant,
            cost_form: self.form,
        }
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let text = match &self.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?),
            None => None,
        };
        Ok(reports::parse_config(text.as_deref(), &self.overrides())?)
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::kind) {
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Numeric) => 3,
        Some(ErrorKind::Io) => 4,
        None if err.downcast_ref::<ConfigError>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cmd: Cmd) -> anyhow::Result<ExitCode> {
    let (command, args) = match cmd {
        Cmd::Ergodic(a) => (Command::Ergodic, a),
        Cmd::Variance(a) => (Command::Variance, a),
        Cmd::KsCheck(a) => (Command::KsCheck, a),
        Cmd::CorrCheck(a) => (Command::CorrCheck, a),
        Cmd::ParseCase { case } => {
            parse_case(&case)?;
            return Ok(ExitCode::SUCCESS);
        }
        Cmd::Replay { manifest, out } => return replay(&manifest, out),
    };
    let config = args.resolve()?;
    let result = reports::execute(command, &config)?;
    print_result(&result);
    let written = reports::write_run(command, &config, &result, &args.out)?;
    print_written(&written);
    Ok(ExitCode::SUCCESS)
}

fn parse_case(spec: &str) -> Result<(), Error> {
    let source = CaseSource::parse(spec);
    let case = source.load()?;
    let model = grid_io::build_dc_jacobian(&case, &MeasurementConfig::default())?;
    println!("case           {}", source.label());
    println!("buses          {}", case.bus_count());
    println!("slack bus      {}", case.slack_id());
    println!("states         {}", case.state_count());
    println!("branches       {} ({} in service)", case.branches().len(), case.in_service_branches().count());
    println!("measurements   {}", model.m());
    println!("jacobian       {} x {}, full column rank", model.m(), model.n());
    Ok(())
}

fn replay(manifest: &Path, out: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let out = out.unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")));
    let replay = reports::replay(manifest, &out).with_context(|| format!("replaying {}", manifest.display()))?;
    print_result(&replay.result);
    print_written(&replay.written);
    match replay.matches_original {
        Some(true) => {
            println!("replay matches the original CSV byte for byte");
            Ok(ExitCode::SUCCESS)
        }
        Some(false) => {
            eprintln!("replay differs from the original CSV");
            Ok(ExitCode::from(1))
        }
        None => {
            println!("original CSV not found; nothing to compare");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_written(w: &reports::WrittenRun) {
    println!("wrote {}", w.csv_path.display());
    if let Some(p) = &w.plot_path {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", w.manifest_path.display());
}

fn print_result(result: &RunResult) {
    match result {
        RunResult::Report(r) => print_report(r),
        RunResult::Ks(rows) => {
            println!("{:>10} {:>7} {:>10} {:>10}", "beta", "trials", "D", "p");
            for k in rows {
                println!("{:>10} {:>7} {:>10.5} {:>10.4}", k.beta, k.trials, k.ks_statistic, k.p_value);
            }
        }
        RunResult::Correlation(rows) => {
            println!("{:>10} {:>7} {:>10}", "beta", "trials", "rho");
            for (beta, trials, rho) in rows {
                println!("{beta:>10} {trials:>7} {rho:>10.5}");
            }
        }
    }
}

fn print_report(r: &MonteCarloReport) {
    println!(
        "n = {}, m = {}, alpha = {:.4}, perfect cost per state = {:.6}",
        r.n, r.m, r.alpha, r.perfect_cost_per_state
    );
    match r.kind {
        stealthrmt_core::harness::ExperimentKind::Ergodic => {
            println!("{:>10} {:>9} {:>12} {:>10} {:>12}", "beta", "k", "mc F/n", "std err", "asymptotic");
            for b in &r.per_beta {
                println!(
                    "{:>10} {:>9} {:>12.6} {:>10.2e} {:>12.6}",
                    b.beta, b.k, b.per_state_mean, b.per_state_std_error, b.asymptotic.ergodic_mean
                );
            }
        }
        stealthrmt_core::harness::ExperimentKind::Variance => {
            println!(
                "{:>10} {:>9} {:>11} {:>23} {:>23} {:>9}  matching",
                "beta", "k", "var F", "95% ci", "bounds", "gap cap"
            );
            for b in &r.per_beta {
                let Some(c) = &b.variance_check else { continue };
                let bounds = match (b.asymptotic.var_lower, b.asymptotic.var_upper) {
                    (Some(lo), Some(hi)) => format!("[{lo:.5}, {hi:.5}]"),
                    _ => "undefined".to_string(),
                };
                let matching: Vec<&str> = c.matching_variants.iter().map(|v| v.name()).collect();
                println!(
                    "{:>10} {:>9} {:>11.5} {:>23} {:>23} {:>9.5}  {}",
                    b.beta,
                    b.k,
                    b.variance,
                    format!("[{:.5}, {:.5}]", c.ci_low, c.ci_high),
                    bounds,
                    b.asymptotic.gap_bound.unwrap_or(f64::NAN),
                    if matching.is_empty() { "none".to_string() } else { matching.join(",") }
                );
            }
        }
    }
}
