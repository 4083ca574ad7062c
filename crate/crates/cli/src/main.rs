//! `concept-cover`: localize concepts over binarized feature maps, then relate
//! recognition quality to scene classification accuracy.

mod args;
mod commands;
mod failure;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{Failure, Status};

fn init_logging() {
    let env = env_logger::Env::new()
        .filter_or("CONCEPT_COVER_LOG", "warn")
        .write_style("CONCEPT_COVER_LOG_STYLE");
    env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<Status, Failure> {
    match cli.command {
        Command::Localize(a) => commands::localize::run(&a),
        Command::Analyze(a) => commands::analyze::run(&a),
        Command::Sweep(a) => commands::sweep::run(&a),
        Command::GenSynth(a) => commands::gen_synth::run(&a),
        Command::Stats(a) => commands::stats::run(&a),
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => status.exit_code(),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.exit_code()
        }
    }
}
