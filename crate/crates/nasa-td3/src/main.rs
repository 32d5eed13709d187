//! Command-line entry point: train, evaluate, plot, inspect.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nasa_td3::harness::{checkpoint, evaluate, plot, train, RunConfig};

#[derive(Parser)]
#[command(name = "nasa-td3", version, about = "Image-based TD3 with novelty and surprise intrinsic rewards")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the training protocol described by a config file.
    Train {
        /// Path to a key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and print return statistics.
    Eval {
        /// Checkpoint written by train.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long)]
        episodes: usize,
    },
    /// Render learning-curve SVGs from metrics CSV files.
    Plot {
        /// Metrics CSV files, any mix of variants and seeds.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Directory for the SVG files.
        #[arg(long)]
        out: PathBuf,
    },
    /// List the contents of a checkpoint.
    InspectCheckpoint {
        /// Checkpoint written by train.
        checkpoint: PathBuf,
    },
}

fn run(cmd: Cmd) -> nasa_td3::Result<()> {
    match cmd {
        Cmd::Train { config, seed, out } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = RunConfig::parse(&text)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out_dir = out.display().to_string();
            }
            let outcome = train(&cfg)?;
            println!("metrics    {}", outcome.metrics_path.display());
            println!("eval       {}", outcome.eval_path.display());
            println!("checkpoint {}", outcome.checkpoint_path.display());
            if let Some((mean, sd)) = outcome.final_eval {
                println!("final eval mean_return={mean} return_stddev={sd}");
            }
        }
        Cmd::Eval { checkpoint, episodes } => {
            let mut loaded = checkpoint::load(&checkpoint)?;
            let cfg = &loaded.config;
            let (mean, sd) = evaluate(
                &loaded.model,
                &cfg.env,
                cfg.image_size,
                cfg.frame_stack,
                episodes,
                &mut loaded.streams.eval,
            )?;
            println!("episodes={episodes} mean_return={mean} return_stddev={sd}");
        }
        Cmd::Plot { csv, out } => {
            for path in plot::plot(&csv, &out)? {
                println!("{}", path.display());
            }
        }
        Cmd::InspectCheckpoint { checkpoint } => {
            print!("{}", checkpoint::inspect(&checkpoint)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    nasa_td3::nn::enable_flush_to_zero();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
