//! Experiment configuration files.
//!
//! A configuration file mirrors the command-line flags, one per line:
//! `seed = 7`, `protocol = kill-b`, or a bare `fair` for switches. Blank
//! lines and lines starting with `#` are ignored. `--config PATH` may appear
//! anywhere on the command line; flags given explicitly take precedence.

use anyhow::{bail, Context, Result};

/// Replace `--config PATH` by the flags of the file, inserted right after
/// the subcommand so that explicit flags override them.
pub fn expand_args(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config file {path}"))?;
    let flags = parse_config(&text)?;
    let at = if rest.len() > 1 { 2 } else { rest.len() };
    rest.splice(at..at, flags);
    Ok(rest)
}

/// Translate configuration lines into command-line flags.
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            bail!("config line {}: bad key '{key}'", i + 1);
        }
        out.push(format!("--{}", key.replace('_', "-")));
        if let Some(v) = value {
            out.push(v.trim_matches('"').to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_become_flags() {
        let flags = parse_config("# experiment\nprotocol = kill-b\nmax_steps = 10\nfair\n").unwrap();
        assert_eq!(flags, vec!["--protocol", "kill-b", "--max-steps", "10", "--fair"]);
    }

    #[test]
    fn bad_keys_are_rejected() {
        assert!(parse_config("no spaces allowed = 1").is_err());
    }
}
