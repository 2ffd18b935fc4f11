mod args;
mod pipeline;

use std::io::{ErrorKind, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = match &cli.command {
        Command::Replay(a) => a.metrics.verbose,
        Command::Experiment(a) => a.metrics.verbose,
        _ => false,
    };
    // Logging is configured from flags only so that runs do not depend on the environment.
    env_logger::Builder::new()
        .filter_level(if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Replay(a) => pipeline::replay_command(a),
        Command::Experiment(a) => pipeline::experiment_command(a),
        Command::Synth(a) => pipeline::synth_command(a),
        Command::Inspect(a) => pipeline::inspect_command(a),
    };
    match result.and_then(|v| Ok(serde_json::to_string_pretty(&v)?)) {
        Ok(json) => match writeln!(std::io::stdout().lock(), "{json}") {
            Err(e) if e.kind() != ErrorKind::BrokenPipe => {
                eprintln!("error: cannot write to stdout: {e}");
                ExitCode::from(1)
            }
            _ => ExitCode::SUCCESS,
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
