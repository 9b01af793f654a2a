use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oscopt_cli::commands::{cmd_compare, cmd_defaults, cmd_plot_data, cmd_run, cmd_sweep_damping};
use oscopt_cli::config::{ExperimentConfig, Setting};
use oscopt_cli::error::CliError;

/// Certified experiments with damped-oscillator optimization schemes.
#[derive(Parser)]
#[command(name = "oscopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; omitted fields take defaults (see `defaults`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Iteration budget override.
    #[arg(long)]
    iters: Option<usize>,
    /// Step size override: a number or "auto" (= 1/sqrt(L)).
    #[arg(long)]
    step: Option<String>,
    /// Damping override: a number or "auto" (= 2*sqrt(alpha)).
    #[arg(long)]
    damping: Option<String>,
    /// Certification toggle: on | off.
    #[arg(long)]
    certify: Option<String>,
    /// Replication seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gap tolerance (compare target).
    #[arg(long)]
    tol: Option<f64>,
    /// Scheme variant override.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Commands {
    /// Run a (certified) experiment and write trace/certificate CSVs.
    Run(CommonArgs),
    /// Compare variants on a shared problem: iterations to tolerance.
    Compare(CommonArgs),
    /// Sweep the damping rate over a grid and fit empirical decay rates.
    SweepDamping(CommonArgs),
    /// Convert trace CSVs to gnuplot-ready (n, log10 gap) files.
    PlotData {
        /// Trace CSV files produced by `run`.
        traces: Vec<PathBuf>,
        /// Directory for the .dat files (default: next to each input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(iters) = args.iters {
        config.run.iterations = iters;
    }
    if let Some(step) = &args.step {
        config.scheme.step = Setting::parse(step)?;
    }
    if let Some(damping) = &args.damping {
        config.scheme.damping = Setting::parse(damping)?;
    }
    if let Some(certify) = &args.certify {
        config.run.certify = match certify.as_str() {
            "on" => true,
            "off" => false,
            other => {
                return Err(CliError::Config(format!(
                    "--certify expects on|off, got {other:?}"
                )))
            }
        };
    }
    if let Some(seeds) = &args.seeds {
        config.run.seeds = seeds.clone();
    }
    if let Some(out) = &args.out {
        config.run.out_dir = out.display().to_string();
    }
    if let Some(tol) = args.tol {
        config.run.tolerance = tol;
    }
    if let Some(variant) = &args.variant {
        config.scheme.variant = variant.clone();
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Commands::Run(args) => cmd_run(&load_config(&args)?),
        Commands::Compare(args) => cmd_compare(&load_config(&args)?),
        Commands::SweepDamping(args) => cmd_sweep_damping(&load_config(&args)?),
        Commands::PlotData { traces, out } => cmd_plot_data(&traces, out.as_deref()),
        Commands::Defaults => {
            cmd_defaults();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
