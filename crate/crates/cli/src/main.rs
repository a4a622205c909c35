use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use grover_sim_cli::config::Config;
use grover_sim_cli::output::{self, Overrides};
use grover_sim_cli::report;

/// Noisy Grover search experiments on simulated IBM-style hardware.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign config and write its results directory.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        /// Root of the results tree.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print markdown tables for a results directory.
    Report {
        dir: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("setting up the thread pool")?;
    }
    match cli.command {
        Command::Run { config, seed, shots, out } => {
            let config = Config::load(&config)?;
            let run = output::run(config, Overrides { seed, shots }, &out)?;
            println!("{}", run.dir.display());
        }
        Command::Report { dir, out } => {
            let (manifest, results) = output::load(&dir)?;
            let text = report::render(&manifest, &results);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
