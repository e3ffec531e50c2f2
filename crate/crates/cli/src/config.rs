//! Merges a flat JSON config file into the command line.
//!
//! Each key is the long name of a flag of the chosen subcommand, with `-` or
//! `_` as separator. Keys whose flag was given on the command line are
//! skipped.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgAction, CommandFactory, FromArgMatches};
use serde_json::Value;

use crate::args::Cli;
use crate::error::CliError;

pub fn parse(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let argv = expand(argv)?;
    let matches = Cli::command().try_get_matches_from(argv)?;
    Ok(Cli::from_arg_matches(&matches)?)
}

fn expand(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let cmd = Cli::command();
    // a first lenient pass only to find the subcommand and its config file
    let Ok(matches) = cmd.clone().ignore_errors(true).try_get_matches_from(&argv) else {
        return Ok(argv);
    };
    let Some((name, sub)) = matches.subcommand() else {
        return Ok(argv);
    };
    let Ok(Some(path)) = sub.try_get_one::<PathBuf>("config") else {
        return Ok(argv);
    };
    let map = latent_hazard::data::read_flat_config(path)?;
    let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
    for (key, value) in map {
        let long = key.replace('_', "-");
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()) && long != "config")
            .ok_or_else(|| {
                CliError::Usage(format!("{}: unknown config key {key:?}", path.display()))
            })?;
        if sub.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{long}");
        match (arg.get_action(), &value) {
            (ArgAction::SetTrue, Value::Bool(true)) => argv.push(flag.into()),
            (ArgAction::SetTrue, Value::Bool(false)) => {}
            (ArgAction::SetTrue, _) => {
                return Err(CliError::Usage(format!(
                    "{}: config key {key:?} must be true or false",
                    path.display()
                )))
            }
            (_, Value::String(s)) => argv.extend([flag.into(), s.into()]),
            (_, other) => argv.extend([flag.into(), other.to_string().into()]),
        }
    }
    Ok(argv)
}
