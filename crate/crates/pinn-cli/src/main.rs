mod commands;
mod meta;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pinn", version, about = "Tumor-growth parameter identification")]
struct Cli {
    /// Base seed; derives the init/sampling/noise seeds as s, s+1, s+2.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward model and sample a (optionally noisy) dataset.
    Generate(commands::GenerateArgs),
    /// Train a preset or explicit config; writes trajectory.csv and final.json.
    Train(commands::TrainArgs),
    /// Run one preset from several initial guesses and report the spread.
    MultiStart(commands::MultiStartArgs),
    /// Train across (eps, sigma) noise pairs and summarize final errors.
    NoiseSweep(commands::NoiseSweepArgs),
    /// Forward-solve with given parameters and report threshold radii.
    Predict(commands::PredictArgs),
    /// Extract threshold radii from a snapshot dump.
    Radius(commands::RadiusArgs),
    /// Run the fast invariant suite (derivatives, residual, solver, determinism).
    Validate(commands::ValidateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a, cli.seed),
        Command::Train(a) => commands::train(a, cli.seed),
        Command::MultiStart(a) => commands::multi_start(a, cli.seed),
        Command::NoiseSweep(a) => commands::noise_sweep(a, cli.seed),
        Command::Predict(a) => commands::predict(a),
        Command::Radius(a) => commands::radius(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if commands::is_usage_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
