use std::net::IpAddr;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vmd_core::model::DecisionThreshold;
use vmd_core::FeatureWindow;

use crate::error::{Result, ServerError};

fn default_listen_addr() -> IpAddr {
    IpAddr::from([127, 0, 0, 1])
}

fn default_port() -> u16 {
    8089
}

fn default_window_ms() -> u32 {
    FeatureWindow::default().window_ms()
}

fn default_tau() -> f64 {
    DecisionThreshold::default().tau()
}

fn default_pool_size() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn default_max_sessions() -> usize {
    256
}

fn default_idle_timeout_ms() -> u64 {
    30_000
}

/// Server-wide settings. Per-session overrides (window, channel mode)
/// arrive in the optional leading config frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerConfig {
    #[serde(default = "default_listen_addr")]
    pub listen_addr: IpAddr,
    /// Port 0 binds an ephemeral port; read it back from the handle.
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_window_ms")]
    pub default_window_ms: u32,
    #[serde(default = "default_tau")]
    pub default_tau: f64,
    pub model_path: PathBuf,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_max_sessions")]
    pub max_sessions: usize,
    #[serde(default = "default_idle_timeout_ms")]
    pub idle_timeout_ms: u64,
}

impl ServerConfig {
    pub fn new(model_path: PathBuf) -> Self {
        Self {
            listen_addr: default_listen_addr(),
            port: default_port(),
            default_window_ms: default_window_ms(),
            default_tau: default_tau(),
            model_path,
            pool_size: default_pool_size(),
            max_sessions: default_max_sessions(),
            idle_timeout_ms: default_idle_timeout_ms(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_size < 1 {
            return Err(ServerError::Config("pool size must be at least 1".into()));
        }
        if self.max_sessions < 1 {
            return Err(ServerError::Config(
                "max concurrent sessions must be at least 1".into(),
            ));
        }
        if self.idle_timeout_ms == 0 {
            return Err(ServerError::Config(
                "idle timeout must be at least 1 ms".into(),
            ));
        }
        FeatureWindow::new(self.default_window_ms)?;
        DecisionThreshold::new(self.default_tau)?;
        Ok(())
    }

    pub fn default_window(&self) -> FeatureWindow {
        FeatureWindow::new(self.default_window_ms).expect("validated")
    }

    pub fn default_threshold(&self) -> DecisionThreshold {
        DecisionThreshold::new(self.default_tau).expect("validated")
    }
}
