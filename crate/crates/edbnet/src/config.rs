//! Config files supplying flag defaults.
//!
//! Two formats are accepted. A plain text file holds `key = value` lines,
//! with `#` starting a comment and keys spelled like the long flag, with or
//! without the leading dashes and with `_` or `-`. A JSON file is taken to be
//! an artifact sidecar, and its `config` object is used, so the settings that
//! produced an artifact can be fed back in.
//!
//! Flags given on the command line take precedence over the file. For a
//! boolean flag, `true` turns it on and `false` leaves it off. A repeated
//! flag may be given several times in the text format, or as a JSON array.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// One `key = value` entry with the key normalized to its long flag name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

/// Parses the text format.
pub fn parse_text(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(k) => &line[..k],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", n + 1);
        };
        let key = normalize_key(key);
        if key.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        entries.push(Entry { key, value: value.trim().to_string() });
    }
    Ok(entries)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        other => Some(other.to_string()),
    }
}

/// Reads the `config` object of an artifact sidecar.
pub fn parse_json(text: &str) -> Result<Vec<Entry>> {
    let root: Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let Some(Value::Object(map)) = root.get("config") else {
        bail!("JSON config has no `config` object");
    };
    let mut entries = Vec::new();
    for (key, v) in map {
        let key = normalize_key(key);
        match v {
            Value::Array(items) => {
                for item in items {
                    if let Some(value) = scalar(item) {
                        entries.push(Entry { key: key.clone(), value });
                    }
                }
            }
            v => {
                if let Some(value) = scalar(v) {
                    entries.push(Entry { key, value });
                }
            }
        }
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('{') { parse_json(&text) } else { parse_text(&text) };
    parsed.with_context(|| format!("in config file {}", path.display()))
}

/// What the injector needs to know about the target subcommand's flags.
pub struct FlagInfo {
    pub long: String,
    pub aliases: Vec<String>,
    pub takes_value: bool,
}

/// Appends `--key value` for every entry whose flag was not given in `argv`.
pub fn inject(argv: &mut Vec<OsString>, entries: &[Entry], flags: &[FlagInfo]) -> Result<()> {
    let given: BTreeSet<String> = argv
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for e in entries {
        let Some(flag) = flags.iter().find(|f| f.long == e.key) else {
            bail!("config key `{}` is not a flag of this subcommand", e.key);
        };
        if given.contains(&flag.long) || flag.aliases.iter().any(|a| given.contains(a)) {
            continue;
        }
        if flag.takes_value {
            argv.push(format!("--{}", flag.long).into());
            argv.push(e.value.clone().into());
        } else {
            match e.value.as_str() {
                "true" => argv.push(format!("--{}", flag.long).into()),
                "false" => {}
                other => bail!("config key `{}` is a switch; expected true or false, got {other:?}", e.key),
            }
        }
    }
    Ok(())
}
