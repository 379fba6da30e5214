mod args;
mod commands;
mod failure;

use std::process;

use clap::Parser;

use crate::args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Classify(args) => commands::classify(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Record(args) => commands::record(args),
    };
    if let Err(failure) = result {
        eprintln!("{}", failure.to_json());
        process::exit(failure.exit_code());
    }
}
