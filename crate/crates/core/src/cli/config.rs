//! `key = value` config files and the flag > file > default resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

/// Bad input from the user, reported with exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// keys use the long flag names, e.g. `k-neighbors = 16`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(UsageError(format!(
                "config line {}: expected key = value, got {raw:?}",
                i + 1
            )));
        };
        let key = key.trim().to_string();
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(UsageError(format!(
                "config line {}: duplicate key {key:?}",
                i + 1
            )));
        }
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Resolves each setting from flag, then config file, then default, and
/// records the outcome for the metadata echo.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            ..Self::default()
        }
    }

    fn file_value<T>(&mut self, key: &str) -> Result<Option<T>, UsageError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(text) = self.file.get(key) else {
            return Ok(None);
        };
        self.used.insert(key.to_string());
        text.parse()
            .map(Some)
            .map_err(|e| UsageError(format!("config key {key}: {e}")))
    }

    /// Flag value if given, else the config file's, else `None`.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, UsageError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        self.record(key, &value);
        Ok(value)
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, UsageError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.record(key, &value);
        Ok(value)
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, UsageError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| UsageError(format!("missing required setting --{key}")))
    }

    /// Boolean switch: set by the flag, or by `key = true` in the file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, UsageError> {
        let value = flag || self.file_value::<bool>(key)?.unwrap_or(false);
        self.record(key, &value);
        Ok(value)
    }

    /// Records a value that does not come from flags or the file.
    pub fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).expect("settings serialize");
        self.resolved.insert(key.to_string(), v);
    }

    /// Fails on config keys the command never asked for, then returns the
    /// resolved settings.
    pub fn finish(self) -> Result<Map<String, Value>, UsageError> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k) && !self.resolved.contains_key(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(UsageError(format!("unknown config keys: {unknown:?}")));
        }
        Ok(self.resolved)
    }
}
