// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramopt::config::ExperimentConfig;
use ramopt::pipeline::{run_pipeline, write_run, Pipeline};
use ramopt::Error;

/// Raman memory control optimization and fidelity analysis.
#[derive(Parser)]
#[command(name = "ramopt", version)]
struct Cli {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimize the write control with CSDE.
    Optimize,
    /// Optimized efficiency for charges -5..=5.
    ChargeSweep,
    /// OAM fidelity against storage time.
    OamDecay,
    /// Six-projection polarization tomography.
    SamQst,
    /// Homodyne MLE reconstruction and total fidelity.
    Tomo,
    /// Residual-net training data.
    GenData,
    /// Train the residual net.
    TrainNet,
    /// Mode fields, HG decomposition and petal images.
    Modes,
}

impl From<Command> for Pipeline {
    fn from(c: Command) -> Self {
        match c {
            Command::Optimize => Pipeline::Optimize,
            Command::ChargeSweep => Pipeline::ChargeSweep,
            Command::OamDecay => Pipeline::OamDecay,
            Command::SamQst => Pipeline::SamQst,
            Command::Tomo => Pipeline::Tomo,
            Command::GenData => Pipeline::GenData,
            Command::TrainNet => Pipeline::TrainNet,
            Command::Modes => Pipeline::Modes,
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pipeline = Pipeline::from(cli.command);
    let result = run_pipeline(&cfg, pipeline)?;
    write_run(&cli.out_dir, pipeline, cfg.seed, &result)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if !cli.quiet {
        for (k, v) in &result.summary {
            println!("{k} = {v}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!(
                "error kind={} code={} message={}",
                e.kind(),
                e.exit_code(),
                serde_json::to_string(&message).unwrap_or_default()
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
