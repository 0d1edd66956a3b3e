mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pwspd_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Dist(a) => commands::dist(a),
        Command::Kernel(a) => commands::kernel(a),
        Command::SpannerHeatmap(a) => commands::spanner_heatmap(a),
        Command::Chi(a) => commands::chi(a),
        Command::ClusterSweep(a) => commands::cluster_sweep(a),
        Command::GenData(a) => commands::gen_data(a),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    builder.build()?.install(|| dispatch(&cli.command))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pwspd {}: {e}", cli.command.name());
            if let CliError::Usage(_) = e {
                eprintln!("run `pwspd {} --help` for usage", cli.command.name());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
