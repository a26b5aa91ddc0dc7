use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vbip::{commands, Command, ConfigArgs, RunConfig};

const AFTER_HELP: &str = "\
Every flag is also a config key: `--config FILE` reads flat key=value lines
(`#` starts a comment, `_` and `-` are interchangeable in keys). Flags
override the file, the file overrides the defaults.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "vbip", version, about = "Variational Bayes and MCMC for linear inverse problems", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Simulate a blurred, noisy dataset (Blocks signal or image phantom).
    #[command(after_help = AFTER_HELP)]
    Generate(ConfigArgs),
    /// Fit a dataset with mfvb, vmp or mcmc.
    #[command(after_help = AFTER_HELP)]
    Fit(ConfigArgs),
    /// Score two fits (or a fit and a chain) against each other.
    #[command(after_help = AFTER_HELP)]
    Compare(ConfigArgs),
    /// Repeat generate, variational fit, MCMC and compare over replicates.
    #[command(name = "replicate-study", after_help = AFTER_HELP)]
    ReplicateStudy(ConfigArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Generate(a) => (Command::Generate, a),
        Sub::Fit(a) => (Command::Fit, a),
        Sub::Compare(a) => (Command::Compare, a),
        Sub::ReplicateStudy(a) => (Command::ReplicateStudy, a),
    };
    let result = RunConfig::resolve(command, args).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
