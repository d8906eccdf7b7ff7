//! `key=value` config files merged under command-line flags.

use std::collections::BTreeMap;
use std::ffi::OsString;

use clap::{Arg, Command};

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().replace('_', "-");
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(format!("config line {}: duplicate key `{k}`", i + 1));
        }
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn long_args(cmd: &Command) -> impl Iterator<Item = &Arg> {
    cmd.get_arguments().filter(|a| a.get_long().is_some())
}

/// Appends config entries as flags unless the same flag is already given.
/// Unknown keys are rejected.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = find_config(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let entries = parse_config(&text)?;
    let given: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let sub = given.iter().skip(1).find_map(|a| cmd.find_subcommand(a));
    let mut known: Vec<&Arg> = long_args(cmd).collect();
    if let Some(sub) = sub {
        known.extend(long_args(sub));
    }
    let mut out = args;
    for (k, v) in entries {
        if k == "config" {
            return Err("config files cannot name another config".into());
        }
        let arg = known
            .iter()
            .find(|a| a.get_long() == Some(k.as_str()))
            .ok_or_else(|| format!("unknown config key `{k}`"))?;
        let flag = format!("--{k}");
        if given.iter().any(|g| *g == flag || g.starts_with(&format!("{flag}="))) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(flag.into());
            out.push(v.into());
        } else {
            match v.as_str() {
                "true" | "1" | "yes" => out.push(flag.into()),
                "false" | "0" | "no" => {}
                other => return Err(format!("config key `{k}`: expected a boolean, got `{other}`")),
            }
        }
    }
    Ok(out)
}
