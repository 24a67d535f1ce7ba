mod args;
mod commands;
mod config;
mod error;
mod model;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Sub};
use config::Command;
use error::{CliError, EXIT_CONFIG};

fn config_of(sub: Sub) -> Result<Option<config::ExperimentConfig>, CliError> {
    let (command, args) = match sub {
        Sub::Run { config, out_dir } => {
            let mut cfg = args::read_config(&config)?;
            if out_dir.is_some() {
                cfg.output.dir = out_dir;
            }
            return Ok(Some(cfg));
        }
        Sub::Tee(a) => (Command::Tee, a),
        Sub::Irrcorr(a) => (Command::Irrcorr, a),
        Sub::Markov(a) => (Command::Markov, a),
        Sub::Merge(a) => (Command::Merge, a),
        Sub::SecretRate(a) => (Command::SecretRate, a),
        Sub::ApproxSweep(a) => (Command::ApproxSweep, a),
    };
    let print = args.print_config();
    let cfg = args.into_config(command)?;
    if print {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };
    let result = config_of(cli.command).and_then(|cfg| match cfg {
        Some(cfg) => commands::run(&cfg),
        None => Ok((0, Vec::new())),
    });
    match result {
        Ok((code, written)) => {
            for p in written {
                println!("{}", p.display());
            }
            if code != 0 {
                eprintln!("topocorr: assumption violated; report written");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("topocorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
