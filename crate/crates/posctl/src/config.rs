//! Optional `key=value` configuration files.
//!
//! A config file supplies defaults for long options; explicit flags win.
//! Lines starting with `#` and blank lines are ignored. Unknown keys are
//! usage errors so that typos fail loudly.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "metric",
    "strategy",
    "kappa",
    "n-leaders",
    "budget",
    "target-drugs",
    "epsilon",
    "gamma-min",
    "gamma-max",
    "gamma-steps",
    "threads",
];

/// Parsed configuration entries keyed by long option name.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// Loads and validates a config file.
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{path}:{}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{path}:{}: unknown config key {key:?}",
                    lineno + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(ConfigMap { entries })
    }

    /// Looks up `key` and parses it, reporting parse failures as usage
    /// errors.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key} has unparsable value {raw:?}"))
            }),
        }
    }
}

/// Resolves the worker thread count: explicit flag, then config, then the
/// `POSCTL_THREADS` environment variable, then one.
pub fn resolve_threads(flag: Option<usize>, config: &ConfigMap) -> Result<usize, CliError> {
    let from_env = || -> Result<Option<usize>, CliError> {
        match std::env::var("POSCTL_THREADS") {
            Err(_) => Ok(None),
            Ok(raw) => raw.parse::<usize>().map(Some).map_err(|_| {
                CliError::Usage(format!("POSCTL_THREADS has unparsable value {raw:?}"))
            }),
        }
    };
    let threads = match flag {
        Some(t) => t,
        None => match config.get::<usize>("threads")? {
            Some(t) => t,
            None => from_env()?.unwrap_or(1),
        },
    };
    if threads == 0 {
        return Err(CliError::Usage(String::from(
            "thread count must be at least one",
        )));
    }
    Ok(threads)
}
