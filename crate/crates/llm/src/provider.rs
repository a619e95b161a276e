//! Completion providers: the real HTTP client, a deterministic offline
//! mock, and a provider that refuses the network entirely.

use crate::config::ProviderConfig;
use crate::error::LlmError;
use async_trait::async_trait;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// One completion request. `item_id` identifies the post being annotated;
/// the HTTP provider ignores it, the mock keys its determinism on it.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
    pub item_id: String,
}

/// Transport-level failures, classified for the retry policy.
#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited,
    #[error("timed out")]
    Timeout,
    #[error("transient error: {0}")]
    Transient(String),
    #[error("fatal provider error: {0}")]
    Fatal(String),
    #[error("offline mode")]
    Offline,
}

impl ProviderError {
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::RateLimited | ProviderError::Timeout | ProviderError::Transient(_)
        )
    }

    pub(crate) fn into_llm(self, attempts: u32) -> LlmError {
        match self {
            ProviderError::Auth(msg) => LlmError::Auth(msg),
            ProviderError::RateLimited => LlmError::RateLimited { attempts },
            ProviderError::Timeout => LlmError::Timeout { attempts },
            ProviderError::Transient(msg) | ProviderError::Fatal(msg) => LlmError::Provider(msg),
            ProviderError::Offline => LlmError::OfflineCacheMiss,
        }
    }
}

#[async_trait]
pub trait Provider: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

/// Client for any `<base_url>/chat/completions`-shaped endpoint.
pub struct HttpProvider {
    client: reqwest::Client,
    url: String,
    api_key: String,
}

impl HttpProvider {
    /// Build the client, resolving the API key from the environment now so
    /// missing credentials fail before any batch starts.
    pub fn new(cfg: &ProviderConfig) -> Result<HttpProvider, LlmError> {
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| LlmError::Auth(format!("environment variable {} not set", cfg.api_key_env)))?;
        let client = reqwest::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| LlmError::Provider(e.to_string()))?;
        Ok(HttpProvider {
            client,
            url: format!("{}/chat/completions", cfg.base_url.trim_end_matches('/')),
            api_key,
        })
    }
}

#[async_trait]
impl Provider for HttpProvider {
    async fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout
                } else {
                    ProviderError::Transient(e.to_string())
                }
            })?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(ProviderError::Auth(format!("HTTP {status}")));
        }
        if status.as_u16() == 429 {
            return Err(ProviderError::RateLimited);
        }
        if status.is_server_error() {
            return Err(ProviderError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(ProviderError::Fatal(format!("HTTP {status}: {body}")));
        }

        let value: serde_json::Value = response
            .json()
            .await
            .map_err(|e| ProviderError::Fatal(format!("invalid completion JSON: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(|s| s.to_string())
            .ok_or_else(|| {
                ProviderError::Fatal("completion reply carried no message content".into())
            })
    }
}

/// Word cues the mock scores the fenced post text with. The simulator
/// writes posts built from the same vocabulary, so the mock behaves like a
/// competent annotator rather than a coin flip.
const POSITIVE_CUES: [&str; 6] = ["better", "relief", "thanks", "hope", "improved", "grateful"];
const NEGATIVE_CUES: [&str; 6] = ["worse", "scared", "pain", "exhausted", "worried", "awful"];

/// Deterministic offline provider keyed by (post id, seed): scores the post
/// text with small cue-word lists, flips the label with probability `noise`,
/// and reports a confidence that is lower on flipped labels.
pub struct MockProvider {
    seed: u64,
    noise: f64,
}

impl MockProvider {
    pub fn new(seed: u64, noise: f64) -> MockProvider {
        assert!((0.0..=1.0).contains(&noise));
        MockProvider { seed, noise }
    }
}

#[async_trait]
impl Provider for MockProvider {
    async fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut hasher = Sha256::new();
        hasher.update(request.item_id.as_bytes());
        hasher.update(self.seed.to_le_bytes());
        let digest = hasher.finalize();

        let text = request.user.to_lowercase();
        let score = |cues: &[&str]| -> usize {
            cues.iter().map(|cue| text.matches(cue).count()).sum()
        };
        let positive = score(&POSITIVE_CUES);
        let negative = score(&NEGATIVE_CUES);
        let base = match positive.cmp(&negative) {
            std::cmp::Ordering::Greater => "positive",
            std::cmp::Ordering::Less => "negative",
            std::cmp::Ordering::Equal => "neutral",
        };

        let flip_draw = u64::from_le_bytes(digest[0..8].try_into().unwrap()) as f64
            / u64::MAX as f64;
        let (label, flipped) = if flip_draw < self.noise {
            let others: Vec<&str> = ["negative", "neutral", "positive"]
                .into_iter()
                .filter(|l| *l != base)
                .collect();
            (others[digest[8] as usize % 2], true)
        } else {
            (base, false)
        };

        // Confidence correlates with (not) having been flipped, which gives
        // the calibration pipeline something meaningful to plot.
        let spread = digest[9] as f64 / 255.0;
        let confidence = if flipped {
            0.35 + 0.3 * spread
        } else {
            0.7 + 0.3 * spread
        };
        Ok(format!(
            "{{\"label\": \"{label}\", \"confidence\": {confidence:.2}}}"
        ))
    }
}

/// Provider used in `--offline` mode: every call is an error, so only the
/// cache can satisfy requests.
pub struct OfflineProvider;

#[async_trait]
impl Provider for OfflineProvider {
    async fn complete(&self, _request: &ChatRequest) -> Result<String, ProviderError> {
        Err(ProviderError::Offline)
    }
}
