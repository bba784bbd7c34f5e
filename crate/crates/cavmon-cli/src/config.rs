//! Declarative run configuration. A run is reproducible from a single TOML
//! file; any flag given on the command line overrides the file value.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub indicators: Option<Vec<String>>,
    pub delimiter: Option<String>,
    pub vehicle_width: Option<f64>,
    pub min_lane_quality: Option<i64>,
    pub quality_filter: Option<bool>,

    // sweep
    pub intervals: Option<Vec<f64>>,
    pub weights: Option<[f64; 2]>,
    pub alpha: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub delay_bin: Option<f64>,
    pub error_bin: Option<f64>,

    // simulate
    pub channel: Option<String>,
    pub capacity_bps: Option<f64>,
    pub queue_limit: Option<usize>,
    pub propagation: Option<f64>,
    pub interval: Option<f64>,
    pub phase: Option<f64>,
    pub batch: Option<f64>,
    pub horizon: Option<f64>,

    // synth
    pub rate: Option<f64>,
    pub duration: Option<f64>,
    pub sd: Option<PlanConfig>,
    pub lpv: Option<PlanConfig>,
    pub ittc: Option<PlanConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub count: usize,
    pub duration: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub jitter: f64,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    pub fn delimiter_byte(&self) -> Result<Option<u8>> {
        match self.delimiter.as_deref() {
            None => Ok(None),
            Some(s) if s.len() == 1 => Ok(Some(s.as_bytes()[0])),
            Some(s) => anyhow::bail!("delimiter must be a single byte, got {s:?}"),
        }
    }
}

/// Flag value wins over file value wins over the built-in default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
