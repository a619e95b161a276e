//! Provider endpoint configuration.

use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Connection and pacing settings for one chat-completions endpoint.
/// API keys are never stored here, only the name of the environment
/// variable that holds one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    /// Decoding temperature; 0 by default to keep annotations reproducible.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_requests_per_minute")]
    pub requests_per_minute: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_api_key_env() -> String {
    "PROVIDER_API_KEY".to_string()
}

fn default_max_retries() -> u32 {
    3
}

fn default_requests_per_minute() -> f64 {
    60.0
}

fn default_timeout_secs() -> u64 {
    30
}

impl ProviderConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Check the invariants that do not need the network.
    pub fn validate(&self) -> Result<(), String> {
        if self.base_url.trim().is_empty() {
            return Err("base_url must not be empty".into());
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name must not be empty".into());
        }
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature {} must be >= 0", self.temperature));
        }
        if !(self.requests_per_minute > 0.0) {
            return Err(format!(
                "requests_per_minute {} must be > 0",
                self.requests_per_minute
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg: ProviderConfig = serde_json::from_str(
            "{\"base_url\":\"https://api.example.com/v1\",\"model_name\":\"m\"}",
        )
        .unwrap();
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.max_retries, 3);
        assert_eq!(cfg.requests_per_minute, 60.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_rate() {
        let mut cfg: ProviderConfig = serde_json::from_str(
            "{\"base_url\":\"https://api.example.com/v1\",\"model_name\":\"m\"}",
        )
        .unwrap();
        cfg.requests_per_minute = 0.0;
        assert!(cfg.validate().is_err());
    }
}
