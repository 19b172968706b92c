//! Flat `key = value` configuration text.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value      # trailing comments allowed
//! ```
//!
//! Keys are `[a-z0-9_]+`, values are the trimmed remainder of the line.
//! Blank lines are ignored and a key may appear at most once.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(Error::Parse { line: i + 1, reason: format!("bad key `{key}`") });
            }
            if value.is_empty() {
                return Err(Error::Parse { line: i + 1, reason: format!("empty value for `{key}`") });
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Parse { line: i + 1, reason: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    /// Parses `key` if present.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => {
                raw.parse::<T>().map(Some).map_err(|e| Error::invalid(key, format!("cannot parse `{raw}`: {e}")))
            }
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Comma-separated list value.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(raw) = self.get(key) else { return Ok(None) };
        raw.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<T>().map_err(|e| Error::invalid(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Canonical text form: sorted keys, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Shortest text that round-trips an `f64` exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let kv = KeyValues::parse("# header\n\nbeta = 0.3  # inverse T\neta=1\n").unwrap();
        assert_eq!(kv.get("beta"), Some("0.3"));
        assert_eq!(kv.parse_opt::<f64>("eta").unwrap(), Some(1.0));
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(matches!(KeyValues::parse("a = 1\na = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KeyValues::parse("no equals sign"), Err(Error::Parse { line: 1, .. })));
        assert!(KeyValues::parse("Beta = 1").is_err());
    }

    #[test]
    fn bad_number_names_key() {
        let kv = KeyValues::parse("beta = hot").unwrap();
        let err = kv.parse_opt::<f64>("beta").unwrap_err();
        assert!(err.to_string().contains("`beta`"));
    }

    #[test]
    fn lists() {
        let kv = KeyValues::parse("values = 0, 1.5 ,20").unwrap();
        assert_eq!(kv.parse_list::<f64>("values").unwrap(), Some(vec![0.0, 1.5, 20.0]));
    }

    #[test]
    fn text_is_idempotent() {
        let kv = KeyValues::parse("b = 2\na = 1 # x\n").unwrap();
        let again = KeyValues::parse(&kv.to_text()).unwrap();
        assert_eq!(kv, again);
        assert_eq!(kv.to_text(), again.to_text());
    }
}
