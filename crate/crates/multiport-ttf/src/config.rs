//! Flat `key = value` files holding default flag values.
//!
//! Keys are long flag names without the leading dashes. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: expected key = value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("config line {line}: key {key:?} appears twice")]
    Duplicate { line: usize, key: String },
}

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = || ConfigError::Syntax {
            line: i + 1,
            text: raw.to_owned(),
        };
        let (k, v) = line.split_once('=').ok_or_else(syntax)?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(syntax());
        }
        if out.insert(key.clone(), v.trim().to_owned()).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key });
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let cfg = parse("# sweep\nd = 2..8\n\neps=0.1\nmc_samples = 1000\n").unwrap();
        assert_eq!(cfg["d"], "2..8");
        assert_eq!(cfg["eps"], "0.1");
        assert_eq!(cfg["mc-samples"], "1000");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse("d 4"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse("d=4\nd=5"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(parse(" = 3").is_err());
    }
}
