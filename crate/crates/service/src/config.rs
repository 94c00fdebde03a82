//! Service configuration: a TOML file plus environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use slidescore_core::dom::GeometryConfig;
use slidescore_core::pixel::WhitespaceConfig;
use slidescore_core::reward::ShapingConfig;
use slidescore_gateway::PoolConfig;
use thiserror::Error;

pub const ENV_ADDR: &str = "SLIDESCORE_ADDR";
pub const ENV_POOL: &str = "SLIDESCORE_POOL";
pub const ENV_CONFIG: &str = "SLIDESCORE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{var}={value:?}: {message}")]
    Env { var: &'static str, value: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub pool: PoolConfig,
    pub max_html_bytes: usize,
    pub default_timeout_ms: u64,
    pub settle_ms: u64,
    pub viewport_width_px: u32,
    /// In-flight batch records per pool session.
    pub pipelining: usize,
    /// Shaping file; takes precedence over the inline `shaping` table.
    pub shaping_path: Option<PathBuf>,
    pub shaping: ShapingConfig,
    pub whitespace: WhitespaceConfig,
    pub geometry: GeometryConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8787)),
            pool: PoolConfig::default(),
            max_html_bytes: 2 * 1024 * 1024,
            default_timeout_ms: 15_000,
            settle_ms: 500,
            viewport_width_px: 1280,
            pipelining: 2,
            shaping_path: None,
            shaping: ShapingConfig::default(),
            whitespace: WhitespaceConfig::default(),
            geometry: GeometryConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })?;
        if let Some(p) = &cfg.shaping_path {
            let p = origin.parent().map(|dir| dir.join(p)).unwrap_or_else(|| p.clone());
            cfg.shaping = ShapingConfig::load(&p).map_err(|e| ConfigError::Parse { path: p, message: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml_str(&text, path)
    }

    /// Reads the file named by `SLIDESCORE_CONFIG` (if set), applies the
    /// address and pool-size overrides and validates.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = match lookup(ENV_CONFIG) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p))?,
            _ => Self::default(),
        };
        if let Some(v) = lookup(ENV_ADDR) {
            cfg.addr = v.parse().map_err(|e: std::net::AddrParseError| ConfigError::Env {
                var: ENV_ADDR,
                value: v.clone(),
                message: e.to_string(),
            })?;
        }
        if let Some(v) = lookup(ENV_POOL) {
            cfg.pool.size = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                var: ENV_POOL,
                value: v.clone(),
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.pool.size == 0 {
            return bad("pool.size must be >= 1".into());
        }
        if self.pool.queue_bound == 0 {
            return bad("pool.queue_bound must be >= 1".into());
        }
        if self.pipelining == 0 {
            return bad("pipelining must be >= 1".into());
        }
        if self.max_html_bytes == 0 || self.default_timeout_ms == 0 || self.viewport_width_px == 0 {
            return bad("max_html_bytes, default_timeout_ms and viewport_width_px must be > 0".into());
        }
        self.shaping.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.whitespace.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn batch_concurrency(&self) -> usize {
        self.pool.size * self.pipelining
    }

    pub fn settle(&self) -> Duration {
        Duration::from_millis(self.settle_ms)
    }
}
