use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

/// `serve` configuration file (TOML). Command-line flags take precedence.
///
/// ```toml
/// bind = "127.0.0.1"
/// port = 8080
/// catalog = "demo.cmc"
/// precompute_bins = [1, 5]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub precompute_bins: Vec<u32>,
}

fn default_bind() -> String {
    "127.0.0.1".to_string()
}

fn default_port() -> u16 {
    8080
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self { bind: default_bind(), port: default_port(), catalog: None, precompute_bins: Vec::new() }
    }
}

impl ServeConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ServeConfig = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        // a relative catalog path is relative to the config file
        if let (Some(c), Some(dir)) = (&cfg.catalog, path.parent()) {
            if c.is_relative() {
                cfg.catalog = Some(dir.join(c));
            }
        }
        Ok(cfg)
    }
}
