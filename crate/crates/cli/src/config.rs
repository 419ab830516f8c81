//! Plain-text `key = value` configuration.
//!
//! One pair per line; blank lines and lines starting with `#` are skipped.
//! Keys use the long flag names (`-` and `_` are interchangeable). Command
//! line flags are layered on top, so they win on conflict.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            if map
                .entries
                .insert(key.clone(), v.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::Duplicate { line: i + 1, key });
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(normalize(key), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(&normalize(key))
    }

    /// Sets `key` when `value` is present, overriding any file entry.
    pub fn overlay<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v.to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: T::Err| ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            }),
        }
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, key: &str) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// Comma-separated list.
    pub fn get_list<T>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e: T::Err| ConfigError::Value {
                    key: key.to_string(),
                    value: s.to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self
            .entries
            .keys()
            .find(|k| !allowed.iter().any(|a| normalize(a) == **k))
        {
            Some(k) => Err(ConfigError::Unknown(k.clone())),
            None => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let m = ConfigMap::parse("# sweep\nscheme = mrc\n\n--branch-snr-db=10\neps = 0.1, 0.001\n")
            .unwrap();
        assert_eq!(m.raw("scheme"), Some("mrc"));
        assert_eq!(m.raw("branch_snr_db"), Some("10"));
        assert_eq!(m.get::<f64>("branch-snr-db").unwrap(), Some(10.0));
        assert_eq!(m.get_list::<f64>("eps").unwrap(), Some(vec![0.1, 0.001]));
    }

    #[test]
    fn flags_win() {
        let mut m = ConfigMap::parse("m = 10\nn = 2").unwrap();
        m.overlay("m", Some(100u64));
        m.overlay::<u64>("n", None);
        assert_eq!(m.require::<u64>("m").unwrap(), 100);
        assert_eq!(m.require::<u64>("n").unwrap(), 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ConfigMap::parse("oops"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            ConfigMap::parse("a=1\na=2"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        let m = ConfigMap::parse("m = ten").unwrap();
        assert!(matches!(m.get::<u64>("m"), Err(ConfigError::Value { .. })));
        assert!(matches!(
            m.require::<u64>("n"),
            Err(ConfigError::Missing(_))
        ));
        assert!(matches!(m.check_keys(&["n"]), Err(ConfigError::Unknown(_))));
        assert!(m.check_keys(&["m"]).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let m = ConfigMap::parse("b = 2\na = x y\n").unwrap();
        assert_eq!(ConfigMap::parse(&m.to_text()).unwrap(), m);
    }
}
