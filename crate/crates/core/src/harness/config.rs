//! Plain-text `key = value` config files with `[section]` headers. Parsing is
//! hand-rolled so configs stay dependency-free and diff-friendly.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Parsed config: section → key → raw value string. Tracks which keys were
/// read so unknown keys can be rejected with a pointed message.
#[derive(Debug, Default)]
pub struct Ini {
    values: BTreeMap<String, BTreeMap<String, String>>,
    consumed: std::cell::RefCell<Vec<(String, String)>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Ini> {
        let mut values: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config(format!(
                        "line {}: unterminated section header `{line}`",
                        lineno + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                values.entry(section.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let dup = values
                .entry(section.clone())
                .or_default()
                .insert(key.clone(), value);
            if dup.is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}` in section `[{section}]`",
                    lineno + 1
                )));
            }
        }
        Ok(Ini {
            values,
            consumed: std::cell::RefCell::new(Vec::new()),
        })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let v = self.values.get(section)?.get(key)?;
        self.consumed
            .borrow_mut()
            .push((section.to_string(), key.to_string()));
        Some(v.as_str())
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.raw(section, key).unwrap_or(default)
    }

    pub fn require_str(&self, section: &str, key: &str) -> Result<&str> {
        self.raw(section, key).ok_or_else(|| {
            Error::Config(format!("missing required key `{key}` in section `[{section}]`"))
        })
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("[{section}] {key} = `{v}` is not a number"))
            }),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("[{section}] {key} = `{v}` is not a nonnegative integer"))
            }),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("[{section}] {key} = `{v}` is not a nonnegative integer"))
            }),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!(
                "[{section}] {key} = `{v}` is not a boolean (true/false)"
            ))),
        }
    }

    /// Space- or comma-separated list of numbers.
    pub fn f64_list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split([' ', ','])
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse().map_err(|_| {
                        Error::Config(format!("[{section}] {key}: `{t}` is not a number"))
                    })
                })
                .collect(),
        }
    }

    pub fn usize_list_or(&self, section: &str, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split([' ', ','])
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse().map_err(|_| {
                        Error::Config(format!("[{section}] {key}: `{t}` is not an integer"))
                    })
                })
                .collect(),
        }
    }

    /// Error if any key was never read: catches typos like `tirals = 20`.
    pub fn reject_unknown(&self) -> Result<()> {
        let consumed = self.consumed.borrow();
        for (section, keys) in &self.values {
            for key in keys.keys() {
                if !consumed
                    .iter()
                    .any(|(s, k)| s == section && k == key)
                {
                    return Err(Error::Config(format!(
                        "unknown key `{key}` in section `[{section}]` — check spelling against the documented keys"
                    )));
                }
            }
        }
        Ok(())
    }
}
