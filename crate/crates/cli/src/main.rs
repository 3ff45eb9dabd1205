mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;

/// An invocation error: reported like a bad flag, with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    match run(&argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { 2 } else { 1 })
        }
    }
}

fn parse(argv: &[OsString]) -> Result<Cli, clap::Error> {
    Cli::from_arg_matches(&Cli::command().try_get_matches_from(argv)?)
}

/// Splices `--config` entries into `argv`. A lenient first pass finds the
/// file even when required flags are left to it.
fn with_config(argv: &[OsString]) -> anyhow::Result<Vec<OsString>> {
    let lenient = Cli::command()
        .ignore_errors(true)
        .try_get_matches_from(argv);
    let Ok(matches) = lenient else {
        return Ok(argv.to_vec());
    };
    let Some(path) = matches.get_one::<PathBuf>("config").cloned() else {
        return Ok(argv.to_vec());
    };
    if matches.subcommand().is_none() {
        return Ok(argv.to_vec());
    }
    config::merge(&Cli::command(), argv, &matches, &path)
}

fn run(argv: &[OsString]) -> anyhow::Result<ExitCode> {
    let argv = with_config(argv)?;
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    log::debug!("{cli:?}");

    let output = commands::run(&cli)?;
    match &cli.output {
        Some(path) => std::fs::write(path, &output.bytes)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&output.bytes)?;
            stdout.flush()?;
        }
    }
    match output.failure {
        Some(message) => {
            eprintln!("error: {message}");
            Ok(ExitCode::from(1))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}
