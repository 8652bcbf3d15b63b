//! TOML run configuration with `[mesh]`, `[equilibrium]`, `[transfer]` and
//! `[diagnostics]` tables. Values are kept as strings and parsed by the
//! consumer, so `tol = 1e-10` and `tol = "1e-10"` are equivalent; arrays of
//! strings are joined with spaces.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

pub const SECTIONS: [&str; 4] = ["mesh", "equilibrium", "transfer", "diagnostics"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn scalar(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(x) => Some(x.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::Parse { line, msg: e.message().to_string() }
        })?;
        let mut cfg = Config::default();
        for (name, body) in table {
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let toml::Value::Table(body) = body else {
                return Err(Error::Config(format!("{name} must be a table")));
            };
            for (k, v) in body {
                let value = match &v {
                    toml::Value::Array(items) => {
                        items.iter().map(scalar).collect::<Option<Vec<_>>>().map(|s| s.join(" "))
                    }
                    other => scalar(other),
                }
                .ok_or_else(|| Error::Config(format!("unsupported value for [{name}] {k}")))?;
                cfg.set(&name, &k, value);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Parsed value, or `None` when absent.
    pub fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| Error::Config(format!("invalid value {v:?} for [{section}] {key}")))
            }
        }
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.into());
    }

    /// All `(section, key, value)` triples in sorted order.
    pub fn entries(&self) -> Vec<(&str, &str, &str)> {
        self.sections
            .iter()
            .flat_map(|(s, kv)| kv.iter().map(move |(k, v)| (s.as_str(), k.as_str(), v.as_str())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let text = "# run\n[transfer]\npath = \"B\"\nrweight=\"divide\"\n\n[mesh]\nsource = \"structured:8\"\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.get("transfer", "path"), Some("B"));
        assert_eq!(c.get("transfer", "rweight"), Some("divide"));
        assert_eq!(c.get("mesh", "source"), Some("structured:8"));
        assert_eq!(c.get("mesh", "path"), None);
        assert_eq!(c.entries().len(), 3);
    }

    #[test]
    fn typed_values() {
        let c =
            Config::parse("[transfer]\ntol = 1e-10\nbad = \"x\"\n[diagnostics]\nmasks = [\"all\", \"band:0,0.1\"]\n")
                .unwrap();
        assert_eq!(c.parsed::<f64>("transfer", "tol").unwrap(), Some(1e-10));
        assert!(c.parsed::<f64>("transfer", "bad").is_err());
        assert_eq!(c.parsed::<f64>("transfer", "none").unwrap(), None);
        assert_eq!(c.get("diagnostics", "masks"), Some("all band:0,0.1"));
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(Config::parse("[mesh\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("[mesh]\njust words\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Config::parse("[plots]\n"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("mesh = 3\n"), Err(Error::Config(_))));
        assert!(Config::parse("[mesh]\nx = { a = 1 }\n").is_err());
    }
}
