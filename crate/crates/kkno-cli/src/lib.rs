//! Configuration-driven experiment runner around the `kkno` library.
//!
//! `kkno run <config.json> [--out DIR] [--threads N] [--plot]` executes one
//! experiment, writes CSV artifacts (plus an optional SVG chart) and a run
//! manifest, and exits 0 when every check passes, 1 when a numeric check
//! fails (artifacts are still written), or 2 on configuration or I/O errors.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod config;
pub mod csv;
pub mod plot;
pub mod runner;

pub use runner::{run, CliError, RunOptions, RunOutcome, Verdict, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "kkno", version, about = "Kernel smoothing-operator experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory (overrides KKNO_OUT_DIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (results are identical for any value).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a static SVG chart of the main table.
        #[arg(long)]
        plot: bool,
    },
}

pub fn cli_main() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            plot,
        } => {
            if let Some(t) = threads {
                // Ignore failure: the global pool can only be set once.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
            match run(&config, &RunOptions { out_dir: out, plot }) {
                Ok(outcome) => {
                    for v in &outcome.verdicts {
                        println!(
                            "check {}: {} ({})",
                            v.check,
                            if v.pass { "pass" } else { "FAIL" },
                            v.detail
                        );
                    }
                    println!(
                        "artifacts: {} in {}",
                        outcome.outputs.join(", "),
                        outcome.out_dir.display()
                    );
                    if outcome.all_pass() {
                        0
                    } else {
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
    }
}
