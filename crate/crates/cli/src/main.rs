//! `slbench`: Monte-Carlo BER benchmarks for one-bit relay uplink
//! detectors, driven by a flat `key = value` config file.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use onebit_sl::bench::{
    emit_csv, parse_detector_list, run_experiment, run_lmax_sweep, ConfigBuilder,
};

#[derive(Parser)]
#[command(name = "slbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured detectors over the SNR grid and write a BER CSV.
    Run {
        /// Experiment config file (flat `key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (written atomically).
        #[arg(long)]
        out: PathBuf,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config file's detector list (comma-separated).
        #[arg(long)]
        detectors: Option<String>,
    },
    /// Sweep the reduced-search candidate budget over `lmax_grid`,
    /// with the full-search Bernoulli detector as the paired reference.
    SweepLmax {
        /// Experiment config file (must set `lmax_grid`).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (written atomically).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, seed, detectors } => {
            let mut builder = ConfigBuilder::from_path(&config)?;
            if let Some(seed) = seed {
                builder.seed = Some(seed);
            }
            if let Some(list) = &detectors {
                builder.detectors = Some(parse_detector_list(list)?);
            }
            let experiment = builder.build().context("invalid experiment config")?;
            let records = run_experiment(&experiment)?;
            emit_csv(&records, &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
        }
        Command::SweepLmax { config, out } => {
            let experiment = ConfigBuilder::from_path(&config)?
                .build()
                .context("invalid experiment config")?;
            let records = run_lmax_sweep(&experiment)?;
            emit_csv(&records, &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
        }
    }
    Ok(())
}
