use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnp_bench::{make_phantom, run_experiment, BenchError, ExperimentConfig, PhantomKind, PhantomParams, RunOptions};
use pnp_core::{snr_db, Shape, Signal};

#[derive(Parser)]
#[command(name = "pnp", version, about = "Plug-and-play reconstruction benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, budget, seed) triple of an experiment.
    Run {
        config: PathBuf,
        /// Write results here instead of the config's experiment.output.
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Maximum number of runs executing at once.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a config file without running anything.
    Validate { config: PathBuf },
    /// Write a synthetic ground-truth signal in .pnps format.
    Phantom {
        kind: PhantomKind,
        /// `N` for a 1D signal or `HxW` for an image.
        shape: Shape,
        seed: u64,
        out: PathBuf,
        #[arg(long)]
        sparsity: Option<f64>,
        #[arg(long)]
        block: Option<usize>,
    },
    /// Print the SNR (dB) of an estimate against a reference.
    Snr { truth: PathBuf, estimate: PathBuf },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    let config = ExperimentConfig::parse(&text)?;
    config.validate()?;
    Ok(config)
}

fn read_signal(path: &Path) -> Result<Signal, BenchError> {
    Ok(Signal::read_pnps(BufReader::new(File::open(path)?))?)
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run { config, outdir, jobs } => {
            let config = load_config(&config)?;
            let options = RunOptions {
                outdir,
                jobs,
                seed_offset: RunOptions::seed_offset_from_env()?,
            };
            let report = run_experiment(&config, &options)?;
            println!(
                "wrote {} traces and summary.csv to {}",
                report.outcomes.len(),
                report.outdir.display()
            );
        }
        Command::Validate { config } => {
            load_config(&config)?;
            println!("ok");
        }
        Command::Phantom {
            kind,
            shape,
            seed,
            out,
            sparsity,
            block,
        } => {
            let defaults = PhantomParams::default_for(kind);
            let params = PhantomParams {
                sparsity: sparsity.unwrap_or(defaults.sparsity),
                block: block.unwrap_or(defaults.block),
            };
            let signal = make_phantom(kind, shape, params, seed).map_err(|e| BenchError::Invalid(e.to_string()))?;
            signal.write_pnps(BufWriter::new(File::create(&out)?))?;
        }
        Command::Snr { truth, estimate } => {
            let snr = snr_db(&read_signal(&truth)?, &read_signal(&estimate)?)?;
            println!("{snr:.6}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
