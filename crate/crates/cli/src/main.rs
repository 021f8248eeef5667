use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use safemon::experiment::{self, ExperimentConfig};
use safemon::ErrorKind;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Runtime safety monitors for the water-tank system: error-model
/// calibration, abstraction, model checking and monitored campaigns.
#[derive(Debug, Parser)]
#[command(name = "safemon", version)]
struct Cli {
    /// Experiment configuration (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Safety horizon T, overriding the config.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Number of campaign trials, overriding the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the perception-error model from simulated trials.
    Calibrate,
    /// Build the abstract system and write its summary and text dump.
    Abstract,
    /// Compute the bounded safety table of the abstract system.
    Check,
    /// Run monitored trials and compute calibration metrics.
    Campaign,
    /// Compute the calibration of the filter itself.
    ValidateEstimator,
    /// Print the metrics table of a finished campaign.
    Report,
    /// Recompute the monitor columns of a trace CSV.
    Monitor {
        /// Safety table CSV (its JSON sidecar must sit next to it).
        #[arg(long)]
        table: PathBuf,
        /// Trace CSV as written by `campaign`.
        #[arg(long)]
        trace: PathBuf,
        /// Output CSV (default: OUT/traces_monitored.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the model and properties in PRISM syntax.
    ExportPrism {
        /// Automaton in text form; default is the abstract system.
        #[arg(long)]
        pa: Option<PathBuf>,
        /// Label marking unsafe states of the `--pa` automaton.
        #[arg(long, default_value = "unsafe")]
        unsafe_label: String,
    },
    /// Run calibrate, check, campaign, validate-estimator and report.
    Reproduce,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> safemon::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(h) = cli.horizon {
        cfg.tank.horizon = h;
    }
    if let Some(n) = cli.trials {
        cfg.campaign.trials = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> safemon::Result<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Calibrate => {
            experiment::cmd_calibrate(&cfg, out)?;
        }
        Command::Abstract => {
            let s = experiment::cmd_abstract(&cfg, out)?;
            println!("{} states, {} transitions", s.num_states, s.num_transitions);
        }
        Command::Check => {
            let s = experiment::cmd_check(&cfg, out)?;
            println!("{} table entries, T = {}, {}", s.num_entries, s.horizon, s.mode);
        }
        Command::Campaign => {
            let s = experiment::cmd_campaign(&cfg, out)?;
            println!("{} trials, {} breached", s.trials, s.breached_trials);
        }
        Command::ValidateEstimator => {
            let s = experiment::cmd_validate_estimator(&cfg, out)?;
            println!("estimator ECE {:.5}", s.ece);
        }
        Command::Report => print!("{}", experiment::cmd_report(out)?),
        Command::Monitor {
            table,
            trace,
            output,
        } => {
            let dest = output.clone().unwrap_or_else(|| out.join("traces_monitored.csv"));
            let n = experiment::cmd_monitor(table, trace, &dest)?;
            println!("{n} rows written to {}", dest.display());
        }
        Command::ExportPrism { pa, unsafe_label } => {
            experiment::cmd_export_prism(&cfg, out, pa.as_deref(), unsafe_label)?;
        }
        Command::Reproduce => {
            info!("calibrating");
            experiment::cmd_calibrate(&cfg, out)?;
            info!("model checking");
            experiment::cmd_check(&cfg, out)?;
            info!("running campaign");
            experiment::cmd_campaign(&cfg, out)?;
            info!("validating estimator");
            experiment::cmd_validate_estimator(&cfg, out)?;
            print!("{}", experiment::cmd_report(out)?);
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Runtime => EXIT_RUNTIME,
            })
        }
    }
}

