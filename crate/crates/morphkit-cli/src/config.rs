//! Run configuration: declared keys with defaults, optional key=value config
//! file, command-line overrides. Unknown keys are rejected, and every run
//! writes its resolved configuration plus hash beside the outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use morphkit::morphing::fnv1a64;

/// Errors split by exit code: 2 for bad input/config, 1 for internal.
#[derive(Debug)]
pub enum CliError {
    BadInput(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::BadInput(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

pub fn internal<E: fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn bad_input<E: fmt::Display>(e: E) -> CliError {
    CliError::BadInput(e.to_string())
}

/// A declared key with an optional default; `None` means required.
pub struct KeySpec {
    pub key: &'static str,
    pub default: Option<&'static str>,
}

pub const fn key(key: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { key, default }
}

/// Resolved settings for one command run.
pub struct RunConfig {
    command: &'static str,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then the config file, then command-line overrides.
    pub fn resolve(
        command: &'static str,
        allowed: &[KeySpec],
        config_file: Option<&Path>,
        overrides: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for spec in allowed {
            if let Some(d) = spec.default {
                values.insert(spec.key.to_string(), d.to_string());
            }
        }
        let known = |k: &str| allowed.iter().any(|s| s.key == k);

        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::BadInput(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::BadInput(format!(
                        "{}:{}: expected key=value",
                        path.display(),
                        idx + 1
                    ))
                })?;
                let k = k.trim();
                if !known(k) {
                    return Err(CliError::BadInput(format!(
                        "{}:{}: unknown key '{k}' for `{command}`",
                        path.display(),
                        idx + 1
                    )));
                }
                values.insert(k.to_string(), v.trim().to_string());
            }
        }

        for (k, v) in overrides {
            if let Some(v) = v {
                if !known(k) {
                    return Err(CliError::BadInput(format!("unknown key '{k}' for `{command}`")));
                }
                values.insert(k.to_string(), v);
            }
        }

        for spec in allowed {
            if !values.contains_key(spec.key) {
                return Err(CliError::BadInput(format!(
                    "`{command}` requires '{}' (flag or config key)",
                    spec.key
                )));
            }
        }
        Ok(Self { command, values })
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key '{key}' not declared for {}", self.command))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, CliError> {
        self.get(key)
            .parse()
            .map_err(|e| CliError::BadInput(format!("key '{key}': {e}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, CliError> {
        self.get(key)
            .parse()
            .map_err(|e| CliError::BadInput(format!("key '{key}': {e}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, CliError> {
        self.get(key)
            .parse()
            .map_err(|e| CliError::BadInput(format!("key '{key}': {e}")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CliError::BadInput(format!("key '{key}': expected bool, got '{other}'"))),
        }
    }

    pub fn get_path(&self, key: &str) -> PathBuf {
        PathBuf::from(self.get(key))
    }

    /// Sorted key=value text with the hash of that text appended.
    pub fn canonical_with_hash(&self) -> String {
        let mut body = String::new();
        for (k, v) in &self.values {
            body.push_str(&format!("{k}={v}\n"));
        }
        let hash = fnv1a64(body.as_bytes());
        format!("{body}config_hash={hash:016x}\n")
    }

    pub fn hash(&self) -> u64 {
        let mut body = String::new();
        for (k, v) in &self.values {
            body.push_str(&format!("{k}={v}\n"));
        }
        fnv1a64(body.as_bytes())
    }

    /// Write `<command>.resolved.cfg` into the output directory.
    pub fn write_resolved(&self, out_dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(out_dir).map_err(internal)?;
        let path = out_dir.join(format!("{}.resolved.cfg", self.command));
        std::fs::write(path, self.canonical_with_hash()).map_err(internal)
    }
}
