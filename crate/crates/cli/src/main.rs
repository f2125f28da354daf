use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trendalpha::market_data::synthetic::SyntheticConfig;
use trendalpha_cli::commands;
use trendalpha_cli::config::{parse_family, RunConfig};
use trendalpha_cli::CliError;

/// Formulaic-alpha trend prediction pipeline.
#[derive(Parser)]
#[command(name = "trendalpha", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load (or fetch) the price CSVs and write canonical panels.
    Ingest,
    /// Compute, filter and standardize the alpha features.
    Features,
    /// Compute the trend labels.
    Label,
    /// Randomized hyperparameter search with k-fold cross-validation.
    Search {
        #[arg(long)]
        model: String,
    },
    /// Fit one model on the training split.
    Train {
        #[arg(long)]
        model: String,
        /// Use the best hyperparameters from a previous search.
        #[arg(long)]
        from_search: bool,
    },
    /// Score a trained model on the test split.
    Evaluate {
        /// Model file written by `train`.
        model_path: PathBuf,
    },
    /// Train and score the seven comparison models.
    Compare,
    /// Write a synthetic market with a planted momentum signal.
    Synth {
        /// Destination directory; defaults to the configured data directory.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 2500)]
        days: usize,
        #[arg(long, default_value_t = 10)]
        constituents: usize,
        #[arg(long, default_value_t = 0.15)]
        momentum: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::User("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Features => commands::features(&cfg),
        Command::Label => commands::label(&cfg),
        Command::Search { model } => commands::search(&cfg, parse_family(&model)?),
        Command::Train { model, from_search } => commands::train(&cfg, parse_family(&model)?, from_search),
        Command::Evaluate { model_path } => commands::evaluate(&cfg, &model_path),
        Command::Compare => commands::compare(&cfg),
        Command::Synth {
            dir,
            days,
            constituents,
            momentum,
        } => {
            let synth = SyntheticConfig {
                days,
                constituents,
                momentum,
                seed: cfg.seed,
                ..SyntheticConfig::default()
            };
            let dir = dir.unwrap_or_else(|| cfg.data.dir.clone());
            commands::synth(&cfg, &synth, &dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
