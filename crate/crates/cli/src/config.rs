//! Flat `key=value` config files merged into the argument list.
//!
//! Each key names a long flag of the chosen subcommand. File values are
//! inserted right after the subcommand, unless the same flag was given on the
//! command line, so command-line flags always win.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Subcommand names, including nested ones, after which config flags go.
const COMMANDS: [&str; 6] = ["features", "select", "cv", "train", "predict", "evaluate"];
const NESTED: [&str; 1] = ["rfe"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", n + 1);
        };
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Value of `--config` if present (either `--config F` or `--config=F`).
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
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

fn has_flag(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&eq)
    })
}

/// Insert config-file flags into `args`; returns the merged list.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let pairs = parse_config(&text)?;
    let Some(mut at) = args.iter().position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    if args.get(at + 1).is_some_and(|a| NESTED.contains(&a.to_string_lossy().as_ref())) {
        at += 1;
    }
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in pairs {
        if k == "config" || has_flag(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                extra.push(format!("--{k}").into());
                extra.push(v.into());
            }
        }
    }
    let mut merged = args[..=at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}
