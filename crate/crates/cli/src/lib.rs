//! `albalance`: induce imbalance in labeled embedding sets, run active
//! learning simulations over them, and summarize the results.
//!
//! Exit codes: 0 on success, 1 for I/O, parse and validation failures, 2
//! for an infeasible imbalance target or records from mixed configurations.
//! Command-line usage errors exit with clap's code 2.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{InduceArgs, RunArgs};
use crate::config::DataPaths;
use crate::error::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ALBALANCE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "albalance",
    version,
    about = "Imbalance-aware active learning simulations over precomputed embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prune a labeled dataset until its imbalance ratio reaches a target.
    Induce {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        target_ir: f64,
        #[arg(long, default_value_t = 1)]
        min_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pruned labels file.
        #[arg(long)]
        out_labels: PathBuf,
        /// Pruned embeddings file (optional).
        #[arg(long)]
        out_embeddings: Option<PathBuf>,
        /// JSON report with the statistics before and after pruning.
        #[arg(long)]
        report: PathBuf,
    },
    /// Run an active learning experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for per-seed records and curves.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        test_embeddings: Option<PathBuf>,
        #[arg(long)]
        test_labels: Option<PathBuf>,
    },
    /// Class count, sample count, mean, standard deviation and ir of a labels file.
    Stats {
        labels: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Rebuild curves.csv from the run records in a directory.
    Curves {
        dir: PathBuf,
        /// Where to write the CSV (default: DIR/curves.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(CliError::Threads(value)),
    };
    // a second call in the same process finds the pool already built
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    configure_threads()?;
    match command {
        Command::Induce {
            embeddings,
            labels,
            target_ir,
            min_per_class,
            seed,
            out_labels,
            out_embeddings,
            report,
        } => {
            let args = InduceArgs {
                embeddings,
                labels,
                target_ir,
                min_per_class,
                seed,
                out_labels,
                out_embeddings,
                report,
            };
            commands::induce(&args, out).map(drop)
        }
        Command::Run {
            config,
            out: out_dir,
            embeddings,
            labels,
            test_embeddings,
            test_labels,
        } => {
            let args = RunArgs {
                config,
                out_dir,
                data: DataPaths {
                    embeddings,
                    labels,
                    test_embeddings,
                    test_labels,
                },
            };
            commands::run(&args, out).map(drop)
        }
        Command::Stats { labels, json } => commands::stats(&labels, json, out).map(drop),
        Command::Curves { dir, out: path } => commands::curves(&dir, path.as_deref(), out).map(drop),
    }
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
