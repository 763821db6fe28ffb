//! `diffcls`: zero-shot classification with conditional denoisers.

mod calibrate;
mod classify;
mod common;
mod generate;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::output::{mark_failed, OutDir};

#[derive(Debug, Parser)]
#[command(name = "diffcls", version, about)]
struct Cli {
    /// Directory receiving the run's artifacts.
    #[arg(long, global = true, env = "DIFFCLS_OUT_DIR", default_value = "diffcls-out")]
    out_dir: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Gaussian world and a labeled dataset from it.
    GenWorld(generate::GenWorldArgs),
    /// Classify a dataset and report accuracy and model calls.
    Classify(classify::ClassifyArgs),
    /// Accuracy against mean model calls for each strategy and budget.
    Efficiency(classify::EfficiencyArgs),
    /// Fit a confidence model on part of a classify run and report calibration.
    Calibrate(calibrate::CalibrateArgs),
    /// Generate attribute-binding prompt pairs, optionally scoring them.
    BindingGen(generate::BindingArgs),
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = OutDir::create(&cli.out_dir)?;
    match &cli.command {
        Command::GenWorld(a) => generate::run_gen_world(a, &out),
        Command::Classify(a) => classify::run_classify(a, &out),
        Command::Efficiency(a) => classify::run_efficiency(a, &out),
        Command::Calibrate(a) => calibrate::run_calibrate(a, &out),
        Command::BindingGen(a) => generate::run_binding(a, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            mark_failed(&cli.out_dir, &err);
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
