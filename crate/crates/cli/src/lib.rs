//! Command-line front end: `synth`, `train`, `eval` and `forecast`.

pub mod args;
pub mod commands;
mod config;
mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches};
use irradiance_core::Error as CoreError;

pub use args::Cli;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(clap::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::InvalidArgument(_) => EXIT_CONFIG,
                CoreError::Io { .. } | CoreError::Data(_) | CoreError::Checkpoint(_) | CoreError::ConstantChannel(_) => EXIT_IO,
                CoreError::NonFiniteGradient(_) => EXIT_DIVERGED,
                _ => EXIT_OTHER,
            },
        }
    }
}

/// Parses flags (merging any `--config` file) and runs the command.
/// Returns the lines to print on success.
pub fn run<I, T>(argv: I) -> Result<Vec<String>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let first = Cli::command().try_get_matches_from(&argv);
    let config_path = match &first {
        Ok(m) => m.get_one::<PathBuf>("config").cloned(),
        Err(_) => config_flag(&argv),
    };
    let argv = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            config::merge(argv, &config::parse(&text, path)?, path)?
        }
        None => argv,
    };
    let matches = Cli::command().try_get_matches_from(&argv).map_err(CliError::Usage)?;
    let cli = Cli::from_arg_matches(&matches).map_err(CliError::Usage)?;
    commands::dispatch(&cli)
}

fn config_flag(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}
