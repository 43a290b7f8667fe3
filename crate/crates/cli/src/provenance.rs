//! Provenance blocks attached to every JSON report.
//!
//! Flags and config file contents are both recorded verbatim so a
//! report always shows where each effective parameter came from; the
//! merge rule is flags over config over defaults.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use critflow_core::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// Subcommand name.
    pub command: String,
    /// Seed every random draw of the invocation derives from.
    pub seed: u64,
    /// Flags exactly as passed on the command line.
    pub flags: Value,
    /// Path of the config file, when one was given.
    pub config_path: Option<PathBuf>,
    /// Config file contents, verbatim.
    pub config_file: Option<Value>,
    /// Parameters after merging flags over config over defaults.
    pub effective: Value,
    /// Environment variables consulted by the command.
    pub env: Value,
}

/// Loads a JSON config file into a flat object of parameter values.
pub fn load_config(path: Option<&Path>) -> Result<Option<Value>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("config file {} is not valid JSON: {e}", path.display())))?;
    if !value.is_object() {
        return Err(Error::Input(format!(
            "config file {} must hold a JSON object",
            path.display()
        )));
    }
    Ok(Some(value))
}

/// Incremental builder keeping the three provenance views in sync.
pub struct ParamSet<'a> {
    config: Option<&'a Value>,
    flags: Map<String, Value>,
    effective: Map<String, Value>,
}

impl<'a> ParamSet<'a> {
    pub fn new(config: Option<&'a Value>) -> Self {
        Self { config, flags: Map::new(), effective: Map::new() }
    }

    fn config_field(&self, key: &str) -> Option<&Value> {
        self.config.and_then(|c| c.get(key))
    }

    /// Merges one parameter: flag wins, then config, then default.
    /// Records the flag verbatim when present and the effective value
    /// always. Returns the effective value, or None when absent
    /// everywhere.
    pub fn merge<T, F, G>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: Option<T>,
        to_json: F,
        from_json: G,
    ) -> Result<Option<T>>
    where
        T: Clone,
        F: Fn(&T) -> Value,
        G: Fn(&Value) -> Option<T>,
    {
        if let Some(v) = &flag {
            self.flags.insert(key.into(), to_json(v));
        }
        let merged = match flag {
            Some(v) => Some(v),
            None => match self.config_field(key) {
                Some(raw) => Some(from_json(raw).ok_or_else(|| {
                    Error::Input(format!("config field {key:?} has the wrong type"))
                })?),
                None => default,
            },
        };
        if let Some(v) = &merged {
            self.effective.insert(key.into(), to_json(v));
        }
        Ok(merged)
    }

    /// Like [`merge`](Self::merge) but the parameter is mandatory.
    pub fn require<T, F, G>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: Option<T>,
        to_json: F,
        from_json: G,
    ) -> Result<T>
    where
        T: Clone,
        F: Fn(&T) -> Value,
        G: Fn(&Value) -> Option<T>,
    {
        self.merge(key, flag, default, to_json, from_json)?
            .ok_or_else(|| Error::Input(format!("missing required parameter --{key}")))
    }

    pub fn f64(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<Option<f64>> {
        self.merge(key, flag, default, |v| (*v).into(), Value::as_f64)
    }

    pub fn require_f64(&mut self, key: &str, flag: Option<f64>) -> Result<f64> {
        self.require(key, flag, None, |v| (*v).into(), Value::as_f64)
    }

    pub fn u64(&mut self, key: &str, flag: Option<u64>, default: Option<u64>) -> Result<Option<u64>> {
        self.merge(key, flag, default, |v| (*v).into(), Value::as_u64)
    }

    pub fn usize(
        &mut self,
        key: &str,
        flag: Option<usize>,
        default: Option<usize>,
    ) -> Result<Option<usize>> {
        self.merge(
            key,
            flag,
            default,
            |v| (*v as u64).into(),
            |raw| raw.as_u64().map(|v| v as usize),
        )
    }

    pub fn string(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: Option<String>,
    ) -> Result<Option<String>> {
        self.merge(key, flag, default, |v| v.clone().into(), |raw| {
            raw.as_str().map(str::to_string)
        })
    }

    /// Records an environment-derived value under `env`-style keys.
    pub fn note_effective(&mut self, key: &str, value: Value) {
        self.effective.insert(key.into(), value);
    }

    pub fn finish(
        self,
        command: &str,
        seed: u64,
        config_path: Option<PathBuf>,
        env: Value,
    ) -> Provenance {
        Provenance {
            command: command.into(),
            seed,
            flags: Value::Object(self.flags),
            config_path,
            config_file: self.config.cloned(),
            effective: Value::Object(self.effective),
            env,
        }
    }
}
