mod args;
mod commands;
mod config;
mod keys;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use els_core::ElsError;
use els_fhe::FheError;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Els(ElsError),
    Usage(String),
}

impl From<ElsError> for CliError {
    fn from(e: ElsError) -> Self {
        CliError::Els(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Els(ElsError::Io(e))
    }
}

impl From<FheError> for CliError {
    fn from(e: FheError) -> Self {
        CliError::Els(ElsError::Fhe(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Els(e) => e.fmt(f),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Els(e) => match e {
                ElsError::Capacity { .. } => 2,
                ElsError::Data(_) | ElsError::Singular(_) | ElsError::Encoding(_) => 3,
                ElsError::KeyMismatch(_) | ElsError::Fhe(FheError::ParameterMismatch) => 4,
                _ => 1,
            },
        }
    }
}

fn init_workers(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("ELS_WORKERS") {
            Ok(v) => Some(v.parse().map_err(|_| CliError::Usage(format!("ELS_WORKERS={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let argv = config::expand(std::env::args_os().collect()).map_err(CliError::Usage)?;
    let cmd = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true));
    let matches = match cmd.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    init_workers(cli.workers)?;
    match cli.command {
        Command::Params(a) => commands::params(a),
        Command::Keygen(a) => commands::keygen(a),
        Command::Encrypt(a) => commands::encrypt(a),
        Command::Fit(a) => commands::fit(a),
        Command::Decrypt(a) => commands::decrypt(a),
        Command::Predict(a) => commands::predict(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("{}", m.trim_end()),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
