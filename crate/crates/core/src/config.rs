//! `key=value` configuration files for the command line.
//!
//! Each non-blank line that does not start with `#` holds one `key=value`
//! pair. Keys are flag names without the leading dashes; underscores and
//! dashes are interchangeable. The pairs become ordinary flags placed before
//! the ones typed on the command line, so typed flags win.

use std::path::Path;

use crate::error::{Result, SpeError};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SpeError::Parse {
            row: n + 1,
            column: "config".into(),
            reason: format!("expected key=value, got `{line}`"),
        })?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty() {
            return Err(SpeError::Parse {
                row: n + 1,
                column: "config".into(),
                reason: "empty key".into(),
            });
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| SpeError::io(path, e))?;
    parse_config(&text)
}

/// Splices the flags of every `--config <path>` in `args` right after the
/// subcommand (`args[1]`). `args[0]` is the program name.
pub fn expand_config_args(args: Vec<String>) -> Result<Vec<String>> {
    let mut paths = Vec::new();
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| SpeError::param("config", "missing file path"))?;
            paths.push(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            paths.push(path.to_string());
        } else {
            rest.push(a);
        }
    }
    if paths.is_empty() {
        return Ok(rest);
    }
    let mut injected = Vec::new();
    for p in &paths {
        for (k, v) in load_config(Path::new(p))? {
            injected.push(format!("--{k}"));
            injected.push(v);
        }
    }
    let split = rest.len().min(2);
    let mut out: Vec<String> = rest[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let pairs = parse_config("# spe\nn_estimators = 20\n\n--k-bins=5\n").unwrap();
        assert_eq!(
            pairs,
            vec![("n-estimators".into(), "20".into()), ("k-bins".into(), "5".into())]
        );
        assert!(parse_config("oops").is_err());
        assert!(parse_config("=3").is_err());
    }

    #[test]
    fn config_flags_come_before_typed_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "seed=3\ncov=0.15").unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let args = strings(&["spe", "generate", "--config", &path, "--seed", "7"]);
        let out = expand_config_args(args).unwrap();
        assert_eq!(
            out,
            strings(&["spe", "generate", "--seed", "3", "--cov", "0.15", "--seed", "7"])
        );
    }

    #[test]
    fn no_config_is_identity() {
        let args = strings(&["spe", "bench", "--suite", "checkerboard"]);
        assert_eq!(expand_config_args(args.clone()).unwrap(), args);
        assert!(expand_config_args(strings(&["spe", "train", "--config"])).is_err());
    }
}
