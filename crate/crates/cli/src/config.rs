// SPDX-License-Identifier: Apache-2.0

//! Client settings, layered as flags over environment over config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use url::Url;

use crate::error::CliError;

pub const DEFAULT_API_URL: &str = "http://127.0.0.1:8080";
pub const DEFAULT_TIMEOUT_SECS: u64 = 30;
pub const DEFAULT_RETRIES: u32 = 2;

pub const ENV_API_URL: &str = "ARBOHUB_API_URL";
pub const ENV_API_KEY: &str = "ARBOHUB_API_KEY";
pub const ENV_CONFIG: &str = "ARBOHUB_CONFIG";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    pub api_url: Url,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after a network failure or a 5xx answer.
    pub retries: u32,
}

/// One source of settings. Unset fields defer to the next layer down.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub api_url: Option<String>,
    pub api_key: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
}

impl ConfigLayer {
    /// `self` wins wherever it is set.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            api_url: self.api_url.or(lower.api_url),
            api_key: self.api_key.or(lower.api_key),
            timeout_secs: self.timeout_secs.or(lower.timeout_secs),
            retries: self.retries.or(lower.retries),
        }
    }

    pub fn from_env(var: impl Fn(&str) -> Option<String>) -> ConfigLayer {
        let set = |name: &str| var(name).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        ConfigLayer {
            api_url: set(ENV_API_URL),
            api_key: set(ENV_API_KEY),
            ..ConfigLayer::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<ConfigLayer, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    pub fn resolve(self) -> Result<ClientConfig, CliError> {
        let raw = self.api_url.as_deref().unwrap_or(DEFAULT_API_URL);
        let api_url = Url::parse(raw).map_err(|e| CliError::Invalid(format!("api_url {raw:?}: {e}")))?;
        if !matches!(api_url.scheme(), "http" | "https") || api_url.cannot_be_a_base() {
            return Err(CliError::Invalid(format!("api_url {raw:?} must be an absolute http(s) URL")));
        }
        let timeout_secs = self.timeout_secs.unwrap_or(DEFAULT_TIMEOUT_SECS);
        if timeout_secs == 0 {
            return Err(CliError::Invalid("timeout must be at least 1 second".into()));
        }
        Ok(ClientConfig {
            api_url,
            api_key: self.api_key.filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(timeout_secs),
            retries: self.retries.unwrap_or(DEFAULT_RETRIES),
        })
    }
}

/// `$XDG_CONFIG_HOME/arbohub/config.toml`, else `~/.config/arbohub/config.toml`.
pub fn default_config_path() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))?;
    Some(base.join("arbohub").join("config.toml"))
}

/// Loads the config file, if any. An explicitly named file must exist; the
/// default location is optional.
pub fn file_layer(explicit: Option<&Path>) -> Result<ConfigLayer, CliError> {
    match explicit {
        Some(p) => ConfigLayer::from_file(p),
        None => match default_config_path() {
            Some(p) if p.is_file() => ConfigLayer::from_file(&p),
            _ => Ok(ConfigLayer::default()),
        },
    }
}
