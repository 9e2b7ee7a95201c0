//! `key = value` configuration files. Keys are the long flag names of the
//! subcommand being run; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

use crate::UsageError;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }
}

/// Resolves settings with flag > config file > default precedence and keeps a
/// snapshot of every resolved value for the run manifest.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    pub resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver { file, resolved: BTreeMap::new() }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.values.get(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| UsageError(format!("config key {key}: {e}")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.values.get(key) {
                Some(raw) => Some(
                    raw.parse()
                        .map_err(|e| UsageError(format!("config key {key}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    /// Records a value that is not subject to config lookup (paths, flags).
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = ConfigFile::parse("# comment\ntau = 0.1\nepochs=3 # trailing\nbatch_size = 8\n").unwrap();
        let mut r = Resolver::new(&file);
        assert_eq!(r.get("tau", None, 0.05).unwrap(), 0.1);
        assert_eq!(r.get("epochs", Some(7usize), 1).unwrap(), 7);
        assert_eq!(r.get("batch-size", None, 64usize).unwrap(), 8);
        assert_eq!(r.get("seed", None, 0u64).unwrap(), 0);
        assert_eq!(r.resolved["tau"], "0.1");
        assert_eq!(r.resolved.len(), 4);
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        let err = ConfigFile::parse("tau 0.1").unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        let file = ConfigFile::parse("tau = x").unwrap();
        let err = Resolver::new(&file).get("tau", None, 0.05).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
