//! Optional TOML config file, version 1.
//!
//! ```toml
//! v = 1
//! model = "models/boosted.json"
//! window_ms = 5000
//! tau = 0.50
//! backend = "energy:0.05"
//!
//! [serve]
//! listen = "0.0.0.0"
//! port = 9000
//! pool_size = 2
//! max_sessions = 512
//! idle_timeout_ms = 30000
//!
//! [loadtest]
//! target = "127.0.0.1:9000"
//! concurrency = 10
//! calls_per_client = 5
//! frame_interval_ms = 20
//! ramp_ms = 0
//! ```
//!
//! Every key is optional; explicit command-line flags win over file
//! values, which win over built-in defaults. Unknown keys are errors.

use std::net::IpAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub v: Option<u32>,
    pub model: Option<PathBuf>,
    pub window_ms: Option<u32>,
    pub tau: Option<f64>,
    pub backend: Option<String>,
    #[serde(default)]
    pub serve: ServeSection,
    #[serde(default)]
    pub loadtest: LoadtestSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub listen: Option<IpAddr>,
    pub port: Option<u16>,
    pub pool_size: Option<usize>,
    pub max_sessions: Option<usize>,
    pub idle_timeout_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadtestSection {
    pub target: Option<String>,
    pub concurrency: Option<usize>,
    pub calls_per_client: Option<usize>,
    pub frame_interval_ms: Option<u64>,
    pub ramp_ms: Option<u64>,
}

/// Loads the file when a path was given; no path means empty defaults.
pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let config: FileConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config file {}", path.display()))?;
    match config.v {
        Some(CONFIG_VERSION) => Ok(config),
        Some(v) => anyhow::bail!(
            "config file {} is version {v}; this build reads version {CONFIG_VERSION}",
            path.display()
        ),
        None => anyhow::bail!(
            "config file {} is missing the required `v = {CONFIG_VERSION}` field",
            path.display()
        ),
    }
}

/// Flag beats file beats built-in default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_required<T>(flag: Option<T>, file: Option<T>, flag_name: &str) -> anyhow::Result<T> {
    flag.or(file)
        .with_context(|| format!("{flag_name} is required (flag or config file)"))
}
