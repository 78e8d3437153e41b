//! Flat `key = value` configuration files merged under command-line flags.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, CommandFactory};

use crate::args::Cli;
use crate::CliError;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn given_on_command_line(top: &ArgMatches, sub: &ArgMatches, id: &str) -> bool {
    let on_cli =
        |m: &ArgMatches| m.try_get_raw(id).ok().flatten().is_some() && m.value_source(id) == Some(ValueSource::CommandLine);
    on_cli(top) || on_cli(sub)
}

/// Appends file settings not already given as flags, so flags take precedence.
pub fn merge(argv: Vec<OsString>, entries: &[(String, String)], path: &Path) -> Result<Vec<OsString>, CliError> {
    let mut cmd = Cli::command();
    cmd.build();
    // Lenient parse: required flags may still come from the file.
    let top = cmd.clone().ignore_errors(true).try_get_matches_from(&argv).map_err(CliError::Usage)?;
    let (sub_name, sub) = top.subcommand().ok_or_else(|| CliError::Config("no command given".into()))?;
    let sub_cmd = cmd.find_subcommand(sub_name).expect("matched subcommand exists");
    let mut merged = argv;
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::Config(format!("{}: config files cannot include other config files", path.display())));
        }
        let arg = sub_cmd
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Config(format!("{}: unknown setting `{key}` for `{sub_name}`", path.display())))?;
        let id = arg.get_id().as_str();
        if given_on_command_line(&top, sub, id) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::Append) {
            // Repeatable settings list several whitespace-separated values.
            for v in value.split_whitespace() {
                merged.push(format!("--{key}").into());
                merged.push(v.into());
            }
        } else if arg.get_action().takes_values() {
            merged.push(format!("--{key}").into());
            merged.push(value.into());
        } else {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(CliError::Config(format!("{}: `{key}` expects true or false, got `{other}`", path.display())))
                }
            }
        }
    }
    Ok(merged)
}
