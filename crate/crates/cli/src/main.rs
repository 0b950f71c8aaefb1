use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cotangent_lab_cli::{load_config, output_dir, run, validate, CATALOG};

#[derive(Parser)]
#[command(name = "cotlab", version, about = "Periodic orbits, propagation and filtered homology on T^n x D^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write summary.json plus CSV files.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List experiment kinds and their parameters.
    #[command(after_help = "Default tolerances: integrator dt 1e-3, Newton acceptance 1e-8, \
fixed-point acceptance 1e-7, Hofer certificate pad 1e-6.")]
    List,
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run { config, out, threads } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring thread pool")?;
            }
            let config = load_config(&config)?;
            validate(&config)?;
            let dir = output_dir(&config, out);
            let output = run(&config, &dir)?;
            println!("{}: {} ({})", config.experiment.kind(), output.verdict, dir.display());
            Ok(output.status.exit_code())
        }
        Command::List => {
            for (kind, doc) in CATALOG {
                println!("{kind:<15} {doc}");
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let config = load_config(&config)?;
            validate(&config)?;
            println!("{}: ok", config.experiment.kind());
            Ok(0)
        }
    }
}
