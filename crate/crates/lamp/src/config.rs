//! Engine configuration, read from TOML.

use std::path::{Path, PathBuf};

use lamp_core::dlp::{TreeConfig, DEFAULT_FANOUT, DEFAULT_POINT_EPSILON, MIN_FANOUT};
use lamp_core::face::{ToleranceConfig, DEFAULT_TOLERANCE_HIGH, DEFAULT_TOLERANCE_LOW};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overrides `data_dir` when set.
pub const DATA_DIR_ENV: &str = "LAMP_DATA_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub fanout: usize,
    pub tolerance_low: f64,
    pub tolerance_high: f64,
    pub point_epsilon: f64,
    pub strict_keywords: bool,
    /// Matching threads; 0 means one per CPU.
    pub workers: usize,
    pub data_dir: PathBuf,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            fanout: DEFAULT_FANOUT,
            tolerance_low: DEFAULT_TOLERANCE_LOW,
            tolerance_high: DEFAULT_TOLERANCE_HIGH,
            point_epsilon: DEFAULT_POINT_EPSILON,
            strict_keywords: false,
            workers: 0,
            data_dir: PathBuf::from("lamp-data"),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: EngineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    /// Read `path` if given, else use defaults; then apply `LAMP_DATA_DIR`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_owned(), source })?;
                EngineConfig::from_toml(&text, p)?
            }
            None => EngineConfig::default(),
        };
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            config.data_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.fanout < MIN_FANOUT {
            return Err(ConfigError::Invalid(format!("fanout must be at least {MIN_FANOUT}, got {}", self.fanout)));
        }
        if !(self.point_epsilon.is_finite() && self.point_epsilon >= 0.0) {
            return Err(ConfigError::Invalid(format!("point_epsilon must be finite and non-negative, got {}", self.point_epsilon)));
        }
        self.tolerances()?;
        Ok(())
    }

    pub fn tolerances(&self) -> Result<ToleranceConfig, ConfigError> {
        ToleranceConfig::new(self.tolerance_low, self.tolerance_high).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig { fanout: self.fanout, point_epsilon: self.point_epsilon, strict_keywords: self.strict_keywords }
    }
}
