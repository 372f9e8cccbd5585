//! Flat `key = value` configuration with `--set` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
            }
            c.entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(c)
    }

    /// Reads a file; an `include = other.cfg` entry is loaded first (relative
    /// to the including file) and then overridden.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut own = Config::parse(&text)?;
        let Some(inc) = own.entries.remove("include") else { return Ok(own) };
        let inc_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(inc);
        let mut base = Config::from_file(&inc_path)?;
        base.entries.extend(own.entries);
        Ok(base)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{kv}'")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Usage("--set with empty key".into()));
        }
        self.entries.insert(k.to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.get(key).ok_or_else(|| CliError::Usage(format!("missing required key '{key}'")))?;
        v.parse::<f64>().map_err(|_| CliError::Usage(format!("key '{key}': '{v}' is not a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("key '{key}': '{v}' is not a nonnegative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("key '{key}': '{v}' is not a boolean"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comments_and_overrides() {
        let mut c = Config::parse("# header\na = 0.25 # trailing\n\npsi=1.5\n").unwrap();
        assert_eq!(c.f64("a").unwrap(), 0.25);
        c.set("psi=2").unwrap();
        assert_eq!(c.f64("psi").unwrap(), 2.0);
        assert_eq!(c.to_text(), "a = 0.25\npsi = 2\n");
    }

    #[test]
    fn missing_key_is_named() {
        let c = Config::parse("a = 1").unwrap();
        match c.f64("psi") {
            Err(CliError::Usage(m)) => assert!(m.contains("'psi'")),
            other => panic!("{other:?}"),
        }
        assert!(Config::parse("novalue").is_err());
        assert!(c.bool_or("a", false).is_ok());
        assert!(Config::parse("x = maybe").unwrap().bool_or("x", false).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = Config::parse("b = 0.187\na = 3.84\nz = 1e-3\n").unwrap();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }
}
