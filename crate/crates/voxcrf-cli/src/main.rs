//! Command-line driver for volumetric CRF refinement experiments.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad flags, bad
//! config file, invalid parameters), 3 for data errors (missing or
//! inconsistent volume files).

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};

use commands::{evaluate, filter_labels, oracle_check, refine, sweep, synth};

#[derive(Parser)]
#[command(
    name = "voxcrf",
    about = "Volumetric CRF refinement: synthetic scenes, mean-field inference, label masks, metrics, sweeps and oracle checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic nodule scene (intensity, labels, unary).
    Synth(synth::SynthArgs),
    /// Run mean-field CRF refinement on a unary field.
    Refine(refine::RefineArgs),
    /// Gaussian-filter a label volume into a mask.
    FilterLabels(filter_labels::FilterLabelsArgs),
    /// Loss and precision metrics of a prediction against truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Refine + evaluate over a parameter grid, writing a CSV.
    Sweep(sweep::SweepArgs),
    /// Compare mean-field inference with exact Gibbs enumeration.
    OracleCheck(oracle_check::OracleCheckArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => synth::run(args),
        Command::Refine(args) => refine::run(args),
        Command::FilterLabels(args) => filter_labels::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::OracleCheck(args) => oracle_check::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {}", err);
        std::process::exit(err.code);
    }
}
