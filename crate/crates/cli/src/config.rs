//! Run configuration: JSON files with flat dotted keys, overridden by
//! command-line `--set key=value` pairs and dedicated flags. Every command
//! writes the fully resolved configuration next to its outputs.

use amc_core::error::{Error, Result};
use amc_core::eval::DatasetConfig;
use serde_json::{Map, Value};
use std::path::Path;

/// Flat dotted-key configuration store.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: Map<String, Value>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            let parsed: Value = serde_json::from_str(&text)?;
            let Value::Object(map) = parsed else {
                return Err(Error::Config("config file must be a JSON object".into()));
            };
            for (k, v) in map {
                if v.is_object() {
                    return Err(Error::Config(format!(
                        "config key '{k}' is nested; use flat dotted keys"
                    )));
                }
                cfg.values.insert(k, v);
            }
        }
        Ok(cfg)
    }

    /// Apply `key=value` overrides (values parsed as JSON, falling back to
    /// plain strings).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
            self.values.insert(key.to_string(), value);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("key '{key}' must be a number"))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|u| Some(u as usize))
                .ok_or_else(|| Error::Config(format!("key '{key}' must be a non-negative integer"))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_bool()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("key '{key}' must be a boolean"))),
        }
    }

    /// Dataset config assembled from `dataset.*` keys over the defaults.
    pub fn dataset_config(&self, symbols: usize) -> Result<DatasetConfig> {
        let mut cfg = DatasetConfig::with_symbols(symbols);
        if let Some(v) = self.get_usize("dataset.n_subcarriers")? {
            cfg.n_subcarriers = v;
        }
        if let Some(v) = self.get_usize("dataset.cp_len")? {
            cfg.cp_len = v;
        }
        if let Some(v) = self.get_usize("dataset.symbols_per_capture")? {
            cfg.symbols_per_capture = v;
        }
        if let Some(v) = self.get_f64("dataset.bandwidth_hz")? {
            cfg.bandwidth_hz = v;
        }
        if let Some(v) = self.get_f64("dataset.mean_snr_db.low")? {
            cfg.mean_snr_db.0 = v;
        }
        if let Some(v) = self.get_f64("dataset.mean_snr_db.high")? {
            cfg.mean_snr_db.1 = v;
        }
        if let Some(v) = self.get_f64("dataset.snr_floor_db")? {
            cfg.snr_floor_db = v;
        }
        if let Some(v) = self.get_f64("dataset.cfo.low")? {
            cfg.cfo_range.0 = v;
        }
        if let Some(v) = self.get_f64("dataset.cfo.high")? {
            cfg.cfo_range.1 = v;
        }
        if let Some(v) = self.get_usize("dataset.timing_offset")? {
            cfg.timing_offset = v;
        }
        if let Some(v) = self.get_f64("dataset.target_ser")? {
            cfg.target_ser = v;
        }
        if let Some(v) = self.get_f64("dataset.power_budget_per_subcarrier")? {
            cfg.power_budget_per_subcarrier = v;
        }
        if let Some(v) = self.get_bool("dataset.apply_power_loading")? {
            cfg.apply_power_loading = v;
        }
        if let Some(v) = self.get_usize("dataset.max_redraws")? {
            cfg.max_redraws = v;
        }
        Ok(cfg)
    }

    /// Serialize the resolved key set.
    pub fn snapshot(&self) -> String {
        serde_json::to_string_pretty(&Value::Object(self.values.clone())).expect("config is JSON")
    }

    pub fn write_snapshot(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("resolved-config.json"), self.snapshot())?;
        Ok(())
    }
}

/// Seed resolution order: flag, then AMC_SEED, then 0.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("AMC_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

/// Default output directory for a run.
pub fn default_out_dir() -> std::path::PathBuf {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    std::path::PathBuf::from("runs").join(stamp.to_string())
}
