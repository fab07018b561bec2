//! JSON configuration with command-line overrides.

use serde_json::{Map, Value};

use crate::harness::{ConfigError, CostForm, ExperimentConfig};
use crate::rmt::LogdetVariant;

pub const KNOWN_KEYS: [&str; 9] = [
    "case_source",
    "decay_r",
    "snr_db",
    "beta_grid",
    "trials",
    "master_seed",
    "replication_l",
    "logdet_variant",
    "cost_form",
];

/// Values given on the command line. `None` keeps the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub case_source: Option<String>,
    pub decay_r: Option<f64>,
    pub snr_db: Option<f64>,
    pub beta_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub replication_l: Option<usize>,
    pub logdet_variant: Option<LogdetVariant>,
    pub cost_form: Option<CostForm>,
}

/// Parses a JSON object into an unvalidated config. Missing keys take
/// their defaults.
pub fn parse_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
    };
    let Value::Object(map) = value else {
        return Err(ConfigError::Parse("top level must be a JSON object".into()));
    };
    if let Some(key) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }

    let mut config = ExperimentConfig::default();
    for (key, value) in map {
        let bad = |what: &str| ConfigError::out_of_range(&key, format!("expected {what}, got {value}"));
        match key.as_str() {
            "case_source" => config.case_source = value.as_str().ok_or_else(|| bad("a string"))?.to_string(),
            "decay_r" => config.decay_r = value.as_f64().ok_or_else(|| bad("a number"))?,
            "snr_db" => config.snr_db = value.as_f64().ok_or_else(|| bad("a number"))?,
            "beta_grid" => {
                let items = value.as_array().ok_or_else(|| bad("an array of numbers"))?;
                config.beta_grid = items
                    .iter()
                    .map(|v| v.as_f64())
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad("an array of numbers"))?;
            }
            "trials" => config.trials = as_count(&value).ok_or_else(|| bad("a non-negative integer"))?,
            "master_seed" => config.master_seed = value.as_u64().ok_or_else(|| bad("a non-negative integer"))?,
            "replication_l" => config.replication_l = as_count(&value).ok_or_else(|| bad("a non-negative integer"))?,
            "logdet_variant" => {
                config.logdet_variant = value
                    .as_str()
                    .and_then(LogdetVariant::from_name)
                    .ok_or_else(|| bad("one of as-printed, squared, real"))?
            }
            "cost_form" => {
                config.cost_form =
                    value.as_str().and_then(CostForm::from_name).ok_or_else(|| bad("direct or equivalent"))?
            }
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(config)
}

fn as_count(v: &Value) -> Option<usize> {
    v.as_u64().and_then(|u| usize::try_from(u).ok())
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(v) = &self.case_source {
            config.case_source = v.clone();
        }
        if let Some(v) = self.decay_r {
            config.decay_r = v;
        }
        if let Some(v) = self.snr_db {
            config.snr_db = v;
        }
        if let Some(v) = &self.beta_grid {
            config.beta_grid = v.clone();
        }
        if let Some(v) = self.trials {
            config.trials = v;
        }
        if let Some(v) = self.master_seed {
            config.master_seed = v;
        }
        if let Some(v) = self.replication_l {
            config.replication_l = v;
        }
        if let Some(v) = self.logdet_variant {
            config.logdet_variant = v;
        }
        if let Some(v) = self.cost_form {
            config.cost_form = v;
        }
    }
}

/// File values, then flags, then validation.
pub fn parse_config(json: Option<&str>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut config = parse_json(json.unwrap_or(""))?;
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}
