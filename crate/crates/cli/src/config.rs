//! `--config <file.toml>`: top-level keys and the table named after the
//! subcommand become `--key value` flags unless the command line sets them.

use std::path::Path;

use anyhow::{bail, Context, Result};
use toml::Value;

fn flag_value(v: &Value) -> Result<Option<String>> {
    Ok(Some(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(_) => return Ok(None),
        Value::Array(items) => {
            let parts: Result<Vec<String>> = items
                .iter()
                .map(|i| match flag_value(i)? {
                    Some(s) => Ok(s),
                    None => bail!("booleans are not allowed inside arrays"),
                })
                .collect();
            parts?.join(",")
        }
        other => bail!("unsupported config value {other}"),
    }))
}

fn has_flag(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&prefix))
}

fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// First positional argument, skipping `--config <path>`.
fn subcommand(args: &[String]) -> Option<&str> {
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--config" {
            skip = true;
            continue;
        }
        if !a.starts_with('-') {
            return Some(a);
        }
    }
    None
}

fn append(args: &mut Vec<String>, table: &toml::Table, explicit: &[String]) -> Result<()> {
    for (key, value) in table {
        if value.is_table() || has_flag(explicit, key) {
            continue;
        }
        match (value, flag_value(value)?) {
            (Value::Boolean(true), _) => args.push(format!("--{key}")),
            (_, Some(text)) => {
                args.push(format!("--{key}"));
                args.push(text);
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn merge_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {path}"))?;
    let table: toml::Table = text
        .parse()
        .with_context(|| format!("parsing config {path}"))?;
    let explicit = args.clone();
    let mut out = args;
    if let Some(Value::Table(section)) = subcommand(&explicit).and_then(|s| table.get(s)) {
        append(&mut out, section, &explicit)?;
    }
    let merged = out.clone();
    append(&mut out, &table, &merged)?;
    Ok(out)
}
