use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod failure;

use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "pamper",
    version,
    about = "Explainable proof-method recommendation from per-method regression trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TrainOpts {
    /// Maximum tree depth.
    #[arg(long, default_value_t = pamper_core::trees::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Regions smaller than this become leaves.
    #[arg(long = "min-split", default_value_t = pamper_core::trees::DEFAULT_MIN_POINTS_TO_SPLIT)]
    min_points_to_split: usize,
}

impl TrainOpts {
    fn config(&self) -> pamper_core::TrainConfig {
        pamper_core::TrainConfig {
            max_depth: self.max_depth,
            min_points_to_split: self.min_points_to_split,
        }
    }
}

#[derive(Debug, Args)]
struct QueryInput {
    /// Model file written by `train`.
    model: PathBuf,
    /// A vector literal such as `[1,0,1]`, or a file with one vector per line.
    vector: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn one regression tree per method and write the model file.
    Train {
        db: PathBuf,
        out: PathBuf,
        /// Feature descriptions, `<index>\t<description>` per line.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Rank methods for a proof state.
    Which {
        #[command(flatten)]
        input: QueryInput,
        /// Number of methods to show.
        #[arg(short, long, default_value_t = pamper_core::recommend::DEFAULT_TOP_K)]
        k: usize,
        /// Emit JSON lines with full-precision expectations.
        #[arg(long)]
        json: bool,
    },
    /// Explain a method's expectation by the branches taken in its tree.
    Why {
        #[command(flatten)]
        input: QueryInput,
        method: String,
        /// Overrides the descriptions stored in the model.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Show where a method ranks among all learned methods.
    Rank {
        #[command(flatten)]
        input: QueryInput,
        method: String,
        #[arg(long)]
        json: bool,
    },
    /// Hold out part of a database, train on the rest and report coincidence rates.
    Evaluate {
        db: PathBuf,
        /// Probability that a point is held out for evaluation.
        #[arg(long, default_value_t = pamper_core::evaluate::DEFAULT_EVAL_FRACTION)]
        fraction: f64,
        #[arg(long, default_value_t = pamper_core::evaluate::DEFAULT_SEED)]
        seed: u64,
        /// Largest recommendation size reported per method.
        #[arg(long, default_value_t = pamper_core::evaluate::DEFAULT_TOP_N)]
        top: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// List the features that branch at least one tree.
    Prune {
        model: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Generate a synthetic database from a planted-model config.
    Gen {
        config: PathBuf,
        #[arg(short = 'n', long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Method usage table of a database.
    Stats { db: PathBuf },
    /// Print size, depth and the tree of every method in a model.
    Inspect { model: PathBuf },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("PAMPER_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::input(format!("PAMPER_THREADS must be a number, got `{value}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Train {
            db,
            out,
            catalog,
            opts,
        } => commands::train(&db, &out, catalog.as_deref(), &opts.config()),
        Command::Which { input, k, json } => commands::which(&input.model, &input.vector, k, json),
        Command::Why {
            input,
            method,
            catalog,
            json,
        } => commands::why(&input.model, &input.vector, &method, catalog.as_deref(), json),
        Command::Rank {
            input,
            method,
            json,
        } => commands::rank(&input.model, &input.vector, &method, json),
        Command::Evaluate {
            db,
            fraction,
            seed,
            top,
            out_dir,
            opts,
        } => commands::evaluate(
            &db,
            &pamper_core::SplitSpec {
                eval_fraction: fraction,
                seed,
            },
            top,
            &out_dir,
            &opts.config(),
        ),
        Command::Prune { model, catalog } => commands::prune(&model, catalog.as_deref()),
        Command::Gen {
            config,
            count,
            seed,
            out,
        } => commands::gen(&config, count, seed, out.as_deref()),
        Command::Stats { db } => commands::stats(&db),
        Command::Inspect { model } => commands::inspect(&model),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
