//! Defaults from a `key=value` file. Flags on the command line win.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

const KEYS: &[&str] = &[
    "ring",
    "seed",
    "confidence",
    "sketch",
    "strategy",
    "alg",
    "t",
    "nnz-bound",
    "post-verify",
    "planting",
    "repeats",
    "budget",
    "eps",
];

#[derive(Debug, Default)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Blank lines and `#` comments are ignored; `_` in keys reads as `-`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", no + 1))?;
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", no + 1));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        debug_assert!(KEYS.contains(&key));
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Input(format!("config: bad value {v:?} for {key}")))
            })
            .transpose()
    }

    /// `flag`, else the configured value, else `default`.
    pub fn resolve<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}
