//! `key=value` run configuration files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Settings read from a config file, keyed by long flag name.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Parses one `key=value` per line. Blank lines and `#` comments are
    /// skipped; keys outside `allowed` are rejected with the offending line.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got '{}'", no + 1, raw.trim()))?;
            let key = key.trim().trim_start_matches("--");
            if !allowed.contains(&key) {
                return Err(format!("line {}: unknown key '{key}' in '{}'", no + 1, raw.trim()));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text, allowed).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Typed lookup; a present but malformed value is an error.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key '{key}': invalid value '{v}': {e}")))
            .transpose()
    }
}
