mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Common, ForecastArgs, ScoreArgs};
use error::{CliError, CliResult};

/// Load and daily-peak forecasting.
#[derive(Debug, Parser)]
#[command(name = "loadfc", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "LOADFC_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Name of the load column to model in multi-target files.
    #[arg(long, global = true, value_name = "NAME")]
    ldc: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset split into train.csv and future.csv.
    Synth,
    /// Train on a dataset and forecast the span of a future file.
    Forecast {
        #[arg(long)]
        train: PathBuf,
        /// Temperatures (and exogenous columns) for the horizon, continuing the training file.
        #[arg(long)]
        future: PathBuf,
        #[arg(long)]
        holidays: Option<PathBuf>,
        /// Also train one model per hierarchy scale and write forecasts_k{k}.csv.
        #[arg(long)]
        multiscale: bool,
    },
    /// Reconcile per-scale forecasts across the temporal hierarchy.
    Reconcile {
        /// Directory holding forecasts_k{k}.csv for every configured scale.
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
    },
    /// Score an hourly forecast against actual load.
    Score {
        #[arg(long)]
        forecast: PathBuf,
        /// File with the actual load column (or a `mean` column).
        #[arg(long)]
        actual: PathBuf,
        /// Reference forecast for skill scores.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Clustered permutation feature importance on a training file.
    SelectFeatures {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        holidays: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let g = cli.global;
    let common = Common { config: g.config, seed: g.seed, out: g.out, ldc: g.ldc };
    match cli.command {
        Command::Synth => commands::synth(&common),
        Command::Forecast { train, future, holidays, multiscale } => {
            commands::forecast(&common, &ForecastArgs { train, future, holidays, multiscale })
        }
        Command::Reconcile { input } => commands::reconcile(&common, &input),
        Command::Score { forecast, actual, reference } => {
            commands::score(&common, &ScoreArgs { forecast, actual, reference })
        }
        Command::SelectFeatures { train, holidays } => commands::select_features(&common, &train, holidays.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(first).render());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::FAILURE
        }
    }
}
