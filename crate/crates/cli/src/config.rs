//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names of the chosen subcommand. File entries are
//! spliced into the argument list ahead of the real flags, and since every
//! flag overrides earlier occurrences of itself, the command line wins.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use clap::Command;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parse the text of a config file. Blank lines and `#` comments are skipped;
/// a `#` after a value starts a trailing comment.
pub fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value, got '{line}'", i + 1))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push(Entry { key, value: value.trim().to_string(), line: i + 1 });
    }
    Ok(out)
}

fn long_names(cmd: &Command) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    for arg in cmd.get_arguments() {
        if let Some(l) = arg.get_long() {
            names.insert(l.to_string());
        }
        if let Some(aliases) = arg.get_all_aliases() {
            names.extend(aliases.into_iter().map(str::to_string));
        }
    }
    names
}

fn is_switch(cmd: &Command, key: &str) -> bool {
    cmd.get_arguments().any(|a| {
        (a.get_long() == Some(key) || a.get_all_aliases().is_some_and(|v| v.contains(&key)))
            && matches!(a.get_action(), clap::ArgAction::SetTrue)
    })
}

/// Turn config entries into flags for subcommand `sub` of `root`, rejecting
/// keys the subcommand does not know.
pub fn to_flags(root: &Command, sub: &str, entries: &[Entry]) -> Result<Vec<String>, String> {
    let cmd = root.find_subcommand(sub).ok_or_else(|| format!("unknown subcommand '{sub}'"))?;
    let mut known = long_names(cmd);
    known.extend(long_names(root));
    known.remove("config");
    known.remove("help");
    known.remove("version");
    let mut flags = Vec::new();
    for e in entries {
        if !known.contains(&e.key) {
            return Err(format!("config line {}: unknown key '{}' for '{sub}'", e.line, e.key));
        }
        let switch = is_switch(cmd, &e.key) || is_switch(root, &e.key);
        if switch {
            match e.value.as_str() {
                "true" => flags.push(format!("--{}", e.key)),
                "false" => {}
                v => return Err(format!("config line {}: '{}' takes true or false, got '{v}'", e.line, e.key)),
            }
        } else {
            flags.push(format!("--{}={}", e.key, e.value));
        }
    }
    Ok(flags)
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Splice the entries of the config file named on the command line, if any,
/// directly after the subcommand.
pub fn expand(root: &Command, args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let names: Vec<&str> = root.get_subcommands().map(|c| c.get_name()).collect();
    let Some(pos) = args.iter().position(|a| names.contains(&a.as_str())) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let flags = to_flags(root, &args[pos], &parse(&text)?)?;
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let e = parse("# header\n\nalpha = 0.5  # trailing\n--n=100\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].key.as_str(), e[0].value.as_str()), ("alpha", "0.5"));
        assert_eq!((e[1].key.as_str(), e[1].value.as_str(), e[1].line), ("n", "100", 4));
        assert!(parse("alpha 0.5").is_err());
    }

    #[test]
    fn finds_config_path() {
        let a = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(config_path(&a(&["x", "--config", "f.cfg"])), Some("f.cfg".into()));
        assert_eq!(config_path(&a(&["x", "--config=g"])), Some("g".into()));
        assert_eq!(config_path(&a(&["x"])), None);
    }
}
