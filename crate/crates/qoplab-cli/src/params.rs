//! Parameter resolution: command-line flags override config-file values,
//! which override built-in defaults. Every value a command reads — whether
//! given or defaulted — is echoed into the run record, so a record's own
//! config block is a complete recipe for replaying the run.

use std::cell::RefCell;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::CliError;

/// Keys a config file may set besides a command's own parameters.
pub const GLOBAL_KEYS: &[&str] = &["seed", "output", "format"];

/// Loads a config file: one flat JSON object mapping parameter names (the
/// long-flag spellings) to numbers, strings, or booleans. Structural
/// problems are configuration errors, not I/O errors — the file was named
/// explicitly, so anything wrong with it is wrong with the invocation.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("config file {} is not valid JSON: {e}", path.display()))
    })?;
    match value {
        Value::Object(map) => {
            for (key, val) in &map {
                if !matches!(val, Value::Number(_) | Value::String(_) | Value::Bool(_)) {
                    return Err(CliError::Config(format!(
                        "config key \"{key}\" must be a number, string, or boolean"
                    )));
                }
            }
            Ok(map)
        }
        _ => Err(CliError::Config(
            "config file must contain a single flat JSON object".into(),
        )),
    }
}

/// The merged parameter view for one command invocation.
pub struct Params {
    merged: Map<String, Value>,
    resolved: RefCell<Map<String, Value>>,
}

impl Params {
    /// Starts from the config-file map: every non-global key must belong to
    /// the command's allowed set. Command-line values are layered on top
    /// afterwards through the `set_*` calls.
    pub fn new(
        file: &Map<String, Value>,
        allowed: &'static [&'static str],
    ) -> Result<Self, CliError> {
        let mut merged = Map::new();
        for (key, value) in file {
            if GLOBAL_KEYS.contains(&key.as_str()) {
                continue; // handled by the global seed/output/format resolution
            }
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown config key \"{key}\" for this command (expected one of: {})",
                    allowed.join(", ")
                )));
            }
            merged.insert(key.clone(), value.clone());
        }
        Ok(Self {
            resolved: RefCell::new(merged.clone()),
            merged,
        })
    }

    fn insert(&mut self, key: &str, value: Value) {
        self.merged.insert(key.to_string(), value.clone());
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    pub fn set_f64(&mut self, key: &str, v: Option<f64>) -> Result<(), CliError> {
        if let Some(v) = v {
            let num = Number::from_f64(v)
                .ok_or_else(|| CliError::Config(format!("--{key} must be a finite number")))?;
            self.insert(key, Value::Number(num));
        }
        Ok(())
    }

    pub fn set_u64(&mut self, key: &str, v: Option<u64>) {
        if let Some(v) = v {
            self.insert(key, Value::Number(Number::from(v)));
        }
    }

    pub fn set_bool(&mut self, key: &str, v: Option<bool>) {
        if let Some(v) = v {
            self.insert(key, Value::Bool(v));
        }
    }

    pub fn set_string(&mut self, key: &str, v: Option<&str>) {
        if let Some(v) = v {
            self.insert(key, Value::String(v.to_string()));
        }
    }

    fn record_default(&self, key: &str, value: Value) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a finite number"))),
            None => {
                let num = Number::from_f64(default).expect("defaults are finite");
                self.record_default(key, Value::Number(num));
                Ok(default)
            }
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a finite number"))),
            None => Ok(None),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_u64()
                .and_then(|x| usize::try_from(x).ok())
                .ok_or_else(|| {
                    CliError::Config(format!("\"{key}\" must be a non-negative integer"))
                }),
            None => {
                self.record_default(key, Value::Number(Number::from(default as u64)));
                Ok(default)
            }
        }
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| {
                    CliError::Config(format!("\"{key}\" must be a non-negative integer"))
                }),
            None => {
                self.record_default(key, Value::Number(Number::from(default)));
                Ok(default)
            }
        }
    }

    pub fn opt_u32(&self, key: &str) -> Result<Option<u32>, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .map(Some)
                .ok_or_else(|| {
                    CliError::Config(format!("\"{key}\" must be a non-negative integer"))
                }),
            None => Ok(None),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_bool()
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a boolean"))),
            None => {
                self.record_default(key, Value::Bool(default));
                Ok(default)
            }
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, CliError> {
        match self.merged.get(key) {
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| CliError::Config(format!("\"{key}\" must be a string"))),
            None => {
                self.record_default(key, Value::String(default.to_string()));
                Ok(default.to_string())
            }
        }
    }

    /// Snapshot of every parameter the command resolved: explicit values as
    /// given, defaults as materialized.
    pub fn echo(&self) -> Map<String, Value> {
        self.resolved.borrow().clone()
    }
}
