// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key a
//! subcommand does not read is an error, as is any duplicate key.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
    used: RefCell<BTreeSet<String>>,
    /// Every value a subcommand resolved, defaults included.
    resolved: RefCell<BTreeMap<String, String>>,
}

impl ConfigMap {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got {line:?}", i + 1)))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(CliError::Config(format!("line {}: invalid key {key:?}", i + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(ConfigMap {
            values,
            base_dir: base_dir.into(),
            ..ConfigMap::default()
        })
    }

    /// Reads `path`, or returns an empty map when no file is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(ConfigMap::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                ConfigMap::parse(&text, base)
            }
        }
    }

    /// Replaces the value of `key`, as a command-line override does.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    pub fn get_or<T: FromStr + ToString>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let value = match self.raw(key) {
            None => default,
            Some(s) => s
                .parse()
                .map_err(|e| CliError::Config(format!("key {key:?}: cannot parse {s:?}: {e}")))?,
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn get_opt<T: FromStr + ToString>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => {
                let v: T = s
                    .parse()
                    .map_err(|e| CliError::Config(format!("key {key:?}: cannot parse {s:?}: {e}")))?;
                self.record(key, v.to_string());
                Ok(Some(v))
            }
        }
    }

    /// Comma-separated list; an absent key yields `default`.
    pub fn list_or<T: FromStr + ToString>(&self, key: &str, default: Vec<T>) -> CliResult<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let items = match self.raw(key) {
            None => default,
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse()
                        .map_err(|e| CliError::Config(format!("key {key:?}: cannot parse {p:?}: {e}")))
                })
                .collect::<CliResult<Vec<T>>>()?,
        };
        let joined = items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        self.record(key, joined);
        Ok(items)
    }

    /// Existing file paths, resolved against the config file's directory.
    pub fn paths(&self, key: &str, required: bool) -> CliResult<Vec<PathBuf>> {
        let raw: Vec<String> = self.list_or(key, Vec::new())?;
        if required && raw.is_empty() {
            return Err(CliError::Config(format!("key {key:?} is required")));
        }
        raw.iter()
            .map(|p| {
                let path = self.base_dir.join(p);
                if path.is_file() {
                    Ok(path)
                } else {
                    Err(CliError::Config(format!(
                        "key {key:?}: no such file {}",
                        path.display()
                    )))
                }
            })
            .collect()
    }

    pub fn path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        let mut p = self.paths(key, false)?;
        match p.len() {
            0 => Ok(None),
            1 => Ok(p.pop()),
            n => Err(CliError::Config(format!("key {key:?} takes one path, got {n}"))),
        }
    }

    /// Errors on any key that no getter asked for.
    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    /// Resolved settings as sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.resolved
            .borrow()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_keys() {
        let c = ConfigMap::parse("# comment\n\nepochs = 5\nhidden=8, 4\n", "").unwrap();
        assert_eq!(c.get_or("epochs", 1usize).unwrap(), 5);
        assert_eq!(c.list_or("hidden", vec![1usize]).unwrap(), vec![8, 4]);
        assert_eq!(c.get_or("seed", 3u64).unwrap(), 3);
        c.finish().unwrap();
        assert_eq!(c.canonical(), "epochs = 5\nhidden = 8,4\nseed = 3\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigMap::parse("epochs 5", "").is_err());
        assert!(ConfigMap::parse("a = 1\na = 2", "").is_err());
        assert!(ConfigMap::parse("bad key = 1", "").is_err());
        let c = ConfigMap::parse("epochs = five\nextra = 1", "").unwrap();
        assert!(matches!(c.get_or("epochs", 1usize), Err(CliError::Config(_))));
        assert!(c.finish().unwrap_err().to_string().contains("extra"));
    }

    #[test]
    fn missing_paths_are_config_errors() {
        let c = ConfigMap::parse("inputs = /definitely/not/here.ulre", "").unwrap();
        assert!(matches!(c.paths("inputs", true), Err(CliError::Config(_))));
        let empty = ConfigMap::parse("", "").unwrap();
        assert!(empty.paths("inputs", true).is_err());
        assert_eq!(empty.path("checkpoint").unwrap(), None);
    }
}
