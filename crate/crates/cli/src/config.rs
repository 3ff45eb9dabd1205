//! `--config` handling: keys become flags appended to the command line,
//! skipping any flag the user already gave.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};
use serde_json::Value;

use crate::UsageError;

const RESERVED: [&str; 3] = ["config", "help", "version"];

/// Returns `argv` with the config file's entries spliced in.
pub fn merge(
    cmd: &Command,
    argv: &[OsString],
    matches: &ArgMatches,
    path: &Path,
) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    let Value::Object(entries) = json else {
        return Err(UsageError(format!("config {} is not a JSON object", path.display())).into());
    };
    let (sub_name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = cmd
        .find_subcommand(sub_name)
        .expect("parsed subcommand exists");

    let mut extra = Vec::new();
    for (key, value) in &entries {
        let arg = cmd
            .get_arguments()
            .chain(sub.get_arguments())
            .find(|a| a.get_id() == key.as_str() && a.get_long().is_some())
            .filter(|_| !RESERVED.contains(&key.as_str()))
            .ok_or_else(|| UsageError(format!("unknown config key {key:?} for {sub_name}")))?;
        let given = |m: &ArgMatches| {
            m.ids().any(|id| id == key) && m.value_source(key) == Some(ValueSource::CommandLine)
        };
        if given(matches) || given(sub_matches) {
            continue;
        }
        let flag = format!("--{}", arg.get_long().unwrap());
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(UsageError(format!(
                "config key {key:?}: expected a string or number"
            ))),
        };
        match (arg.get_action(), value) {
            (ArgAction::SetTrue, Value::Bool(true)) => extra.push(flag),
            (ArgAction::SetTrue, Value::Bool(false)) => {}
            (ArgAction::SetTrue, _) => {
                return Err(
                    UsageError(format!("config key {key:?}: expected true or false")).into(),
                )
            }
            (_, Value::Array(items)) => {
                extra.push(flag);
                for item in items {
                    extra.push(scalar(item)?);
                }
            }
            (_, v) => {
                extra.push(flag);
                extra.push(scalar(v)?);
            }
        }
    }

    let mut out = argv.to_vec();
    let at = out.iter().position(|a| a == "--").unwrap_or(out.len());
    out.splice(at..at, extra.into_iter().map(OsString::from));
    Ok(out)
}
