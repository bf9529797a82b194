//! TOML configuration merged into the command line.
//!
//! Top-level keys apply to every subcommand that accepts them; keys in a
//! `[subcommand]` table apply to that subcommand only. Injected values come
//! before the user's own flags, so flags given on the command line win.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;
use toml::{Table, Value};

use crate::args::Cli;

fn render(v: &Value) -> Result<Option<String>, String> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(_) => None,
        Value::Array(a) => {
            let parts: Result<Vec<String>, String> =
                a.iter().map(|x| render(x)?.ok_or_else(|| "arrays of booleans are not supported".to_string())).collect();
            Some(parts?.join(","))
        }
        other => return Err(format!("unsupported config value {other}")),
    })
}

fn push(out: &mut Vec<OsString>, key: &str, v: &Value) -> Result<(), String> {
    let flag = format!("--{}", key.replace('_', "-"));
    match (v, render(v)?) {
        (Value::Boolean(true), _) => out.push(flag.into()),
        (Value::Boolean(false), _) => {}
        (_, Some(s)) => {
            out.push(flag.into());
            out.push(s.into());
        }
        _ => {}
    }
    Ok(())
}

/// Value of `--config` if present.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Returns `argv` with config values spliced in after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let table: Table = text
        .parse()
        .map_err(|e| format!("bad config {}: {e}", path.to_string_lossy()))?;

    let cmd = Cli::command();
    let Some((pos, sub)) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a.to_str()?).map(|s| (i, s)))
    else {
        return Ok(argv);
    };
    let accepts = |key: &str| {
        let long = key.replace('_', "-");
        sub.get_arguments()
            .chain(cmd.get_arguments())
            .any(|a| a.get_long() == Some(long.as_str()))
    };

    let mut injected = Vec::new();
    for (key, v) in &table {
        if v.is_table() || key == "config" || !accepts(key) {
            continue;
        }
        push(&mut injected, key, v)?;
    }
    if let Some(section) = table.get(sub.get_name()) {
        let section = section
            .as_table()
            .ok_or_else(|| format!("[{}] must be a table", sub.get_name()))?;
        for (key, v) in section {
            push(&mut injected, key, v)?;
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
