//! `dirl` command-line front end.

mod args;
mod commands;
mod error;
mod manifest;
mod svg;

use clap::Parser;

use args::{ChannelCommand, Cli, Command};
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Construct(a) => commands::construct(common, a),
        Command::Evaluate(a) => commands::evaluate(common, a),
        Command::Bounds(a) => commands::bounds(common, a),
        Command::Geometry(a) => commands::geometry(common, a),
        Command::Channel(ChannelCommand::Check) => commands::channel_check(common),
    }
}

fn main() {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.common.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let result = pool
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
        .and_then(|p| p.install(|| run(cli)));
    if let Err(e) = result {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}
