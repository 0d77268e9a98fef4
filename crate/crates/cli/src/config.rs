//! Optional run configuration file: a JSON object or `key = value` lines
//! (`#` starts a comment). Keys mirror the pair-generation and training
//! settings; unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub model: Option<String>,
    pub snr_db: Option<f64>,
    pub dt_s: Option<f64>,
    pub v0: Option<f64>,
    pub wavelength: Option<f64>,
    pub d_bm_wavelengths: Option<f64>,
    pub theta: Option<f64>,
    pub pairs_per_cell: Option<usize>,
    pub pairs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub margin_eta: Option<f64>,
    pub rmsprop_decay: Option<f64>,
    pub rmsprop_epsilon: Option<f64>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

pub fn parse(text: &str) -> Result<FileConfig, String> {
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str::<Value>(text).map_err(|e| e.to_string())?
    } else {
        Value::Object(parse_key_values(text)?)
    };
    serde_json::from_value(value).map_err(|e| e.to_string())
}

fn parse_key_values(text: &str) -> Result<Map<String, Value>, String> {
    let mut map = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let parsed = if let Ok(n) = value.parse::<u64>() {
            Value::from(n)
        } else if let Ok(x) = value.parse::<f64>() {
            Value::from(x)
        } else {
            Value::from(value.trim_matches('"'))
        };
        if map.insert(key.to_owned(), parsed).is_some() {
            return Err(format!("line {}: duplicate key {key}", i + 1));
        }
    }
    Ok(map)
}
