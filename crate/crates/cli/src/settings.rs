//! Metric settings resolved from flags, an optional TOML file and defaults,
//! in that order of precedence.
//!
//! The file may set any of:
//!
//! ```toml
//! epsilon = 0.1
//! region_size = 1.0     # defaults to 10 * epsilon
//! workers = 4
//! clamp_scores = true
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use pqm_core::pipeline::{capped_workers, default_workers};
use pqm_core::{MetricConfig, PqmError};
use serde::{Deserialize, Serialize};

use crate::errors::config;

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Cell size and accuracy threshold [default: 0.1]
    #[arg(short, long)]
    pub epsilon: Option<f64>,

    /// Region edge length [default: 10 * epsilon]
    #[arg(short, long = "region-size")]
    pub region_size: Option<f64>,

    /// Worker threads [default: available parallelism]. PQM_MAX_WORKERS caps it.
    #[arg(short, long)]
    pub workers: Option<usize>,

    /// TOML file with default settings; flags win over it
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub epsilon: Option<f64>,
    pub region_size: Option<f64>,
    pub workers: Option<usize>,
    pub clamp_scores: Option<bool>,
}

pub fn load(path: &Path) -> anyhow::Result<FileSettings> {
    let text = std::fs::read_to_string(path).map_err(|source| PqmError::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Effective settings, echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub epsilon: f64,
    pub region_size: f64,
    pub clamp_scores: bool,
    pub workers: usize,
}

impl Settings {
    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            epsilon: self.epsilon,
            region_size: self.region_size,
            clamp_scores: self.clamp_scores,
        }
    }
}

impl MetricArgs {
    pub fn resolve(&self) -> anyhow::Result<Settings> {
        let file = match &self.config {
            Some(p) => load(p)?,
            None => FileSettings::default(),
        };
        let epsilon = self
            .epsilon
            .or(file.epsilon)
            .unwrap_or(MetricConfig::DEFAULT_EPSILON);
        let region_size = self
            .region_size
            .or(file.region_size)
            .unwrap_or(epsilon * MetricConfig::DEFAULT_REGION_FACTOR);
        let workers = match self.workers.or(file.workers) {
            Some(0) => return Err(config("invalid value for --workers: must be at least 1")),
            Some(w) => capped_workers(w),
            None => default_workers(),
        };
        let settings = Settings {
            epsilon,
            region_size,
            clamp_scores: file.clamp_scores.unwrap_or(true),
            workers,
        };
        if let Err(PqmError::InvalidConfig { field, message }) = settings.metric_config().validate()
        {
            let flag = match field {
                "epsilon" => "-e/--epsilon",
                "region_size" => "-r/--region-size",
                other => other,
            };
            return Err(config(format!("invalid value for {flag}: {message}")));
        }
        Ok(settings)
    }
}
