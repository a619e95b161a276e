//! The annotator: cache-first single-post annotation with retries, and
//! rate-limited batches with bounded parallelism.

use crate::cache::{cache_digest, now_unix, CacheEntry, DiskCache};
use crate::config::ProviderConfig;
use crate::error::LlmError;
use crate::limiter::RateLimiter;
use crate::parse::parse_response;
use crate::provider::{ChatRequest, HttpProvider, Provider};
use crate::RESPONSE_SCHEMA_VERSION;
use annolab_core::{build_prompt, Codebook, Post, PostSet, Prediction, PromptSpec, PromptText};
use futures::stream::{self, StreamExt};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

/// Reminder appended to the user message when the first reply failed to
/// parse; the request is retried exactly once with it.
const FORMAT_REMINDER: &str = "Respond only in the required format.";

const BACKOFF_BASE: Duration = Duration::from_millis(500);
const BACKOFF_CAP: Duration = Duration::from_secs(30);

/// One post that could not be annotated.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BatchFailure {
    pub post_id: String,
    pub error: String,
}

/// Batch outcome: predictions ordered by post id plus per-post failures.
/// Partial failures are data, not errors; a batch only fails hard when
/// every post failed.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub model_id: String,
    pub predictions: Vec<Prediction>,
    pub failures: Vec<BatchFailure>,
}

impl BatchReport {
    pub fn all_cached(&self) -> bool {
        self.predictions.iter().all(|p| p.cached)
    }
}

pub struct Annotator {
    cfg: ProviderConfig,
    provider: Arc<dyn Provider>,
    cache: DiskCache,
    limiter: RateLimiter,
}

impl Annotator {
    /// Annotator against the configured HTTP endpoint. Fails fast when the
    /// API key environment variable is unset.
    pub fn new(cfg: ProviderConfig, cache_dir: &Path) -> Result<Annotator, LlmError> {
        let provider = Arc::new(HttpProvider::new(&cfg)?);
        Ok(Annotator::with_provider(cfg, cache_dir, provider))
    }

    /// Annotator with an injected provider (mock, offline, instrumented).
    pub fn with_provider(
        cfg: ProviderConfig,
        cache_dir: &Path,
        provider: Arc<dyn Provider>,
    ) -> Annotator {
        let limiter = RateLimiter::new(cfg.requests_per_minute);
        Annotator {
            cache: DiskCache::new(cache_dir),
            provider,
            limiter,
            cfg,
        }
    }

    pub fn cache(&self) -> &DiskCache {
        &self.cache
    }

    /// Annotate one post with an already-rendered prompt.
    ///
    /// The reply is persisted to the cache before parsing, so even
    /// unparseable replies are auditable; identical (prompt, model,
    /// temperature) requests are served from the cache without a network
    /// call. A reply that fails both parse passes is retried once with a
    /// format reminder before counting as a failure.
    pub async fn annotate(
        &self,
        post: &Post,
        prompt: &PromptText,
    ) -> Result<Prediction, LlmError> {
        let model_suffix = if prompt.few_shot { "-fs" } else { "" };
        let model_id = format!("{}{model_suffix}", self.cfg.model_name);

        let (raw, was_cached) = self.fetch(&prompt.system, &prompt.user, &post.id).await?;
        let parsed = match parse_response(&raw, prompt.confidence_enabled) {
            Ok(parsed) => (parsed, was_cached),
            Err(_) => {
                let reminded = format!("{}\n\n{FORMAT_REMINDER}", prompt.user);
                let (raw_retry, retry_cached) =
                    self.fetch(&prompt.system, &reminded, &post.id).await?;
                let parsed = parse_response(&raw_retry, prompt.confidence_enabled)
                    .map_err(|_| LlmError::UnparseableResponse { raw: raw_retry })?;
                (parsed, was_cached && retry_cached)
            }
        };
        let (parsed, cached) = parsed;

        Ok(Prediction {
            post_id: post.id.clone(),
            model_id,
            label: parsed.label,
            confidence: parsed.confidence,
            cached,
            lenient_parse: parsed.lenient,
        })
    }

    /// Cache-first fetch of one raw reply, with rate limiting and
    /// exponential-backoff retries on transient failures.
    async fn fetch(
        &self,
        system: &str,
        user: &str,
        item_id: &str,
    ) -> Result<(String, bool), LlmError> {
        let digest = cache_digest(
            RESPONSE_SCHEMA_VERSION,
            &self.cfg.model_name,
            self.cfg.temperature,
            system,
            user,
        );
        if let Some(entry) = self.cache.get(&self.cfg.model_name, &digest)? {
            return Ok((entry.raw_response, true));
        }

        let request = ChatRequest {
            model: self.cfg.model_name.clone(),
            temperature: self.cfg.temperature,
            system: system.to_string(),
            user: user.to_string(),
            item_id: item_id.to_string(),
        };
        let mut attempt: u32 = 0;
        let raw = loop {
            self.limiter.acquire().await;
            match self.provider.complete(&request).await {
                Ok(raw) => break raw,
                Err(e) if e.retryable() && attempt < self.cfg.max_retries => {
                    attempt += 1;
                    tokio::time::sleep(backoff_delay(attempt)).await;
                }
                Err(e) => return Err(e.into_llm(attempt + 1)),
            }
        };

        self.cache.put(
            &self.cfg.model_name,
            &digest,
            &CacheEntry {
                schema_version: RESPONSE_SCHEMA_VERSION,
                model: self.cfg.model_name.clone(),
                temperature: self.cfg.temperature,
                raw_response: raw.clone(),
                created_unix: now_unix(),
            },
        )?;
        Ok((raw, false))
    }

    /// Annotate every post, at most `parallelism` requests in flight, never
    /// exceeding the configured request rate. Output is ordered by post id
    /// regardless of completion order; per-post failures are collected, and
    /// the batch fails hard only when nothing succeeded.
    pub async fn run_batch(
        &self,
        posts: &PostSet,
        spec: &PromptSpec,
        codebook: &Codebook,
        parallelism: usize,
    ) -> Result<BatchReport, LlmError> {
        if parallelism == 0 {
            return Err(LlmError::InvalidParallelism);
        }
        let model_id = format!("{}{}", self.cfg.model_name, spec.model_id_suffix());

        let mut prompts = Vec::with_capacity(posts.len());
        for post in posts.iter() {
            let prompt =
                build_prompt(codebook, post, spec).map_err(|e| LlmError::Prompt(e.to_string()))?;
            prompts.push((post, prompt));
        }

        let mut outcomes: Vec<(String, Result<Prediction, LlmError>)> =
            stream::iter(prompts.into_iter().map(|(post, prompt)| async move {
                let outcome = self.annotate(post, &prompt).await;
                (post.id.clone(), outcome)
            }))
            .buffer_unordered(parallelism)
            .collect()
            .await;
        outcomes.sort_by(|a, b| a.0.cmp(&b.0));

        let mut predictions = Vec::new();
        let mut failures = Vec::new();
        for (post_id, outcome) in outcomes {
            match outcome {
                Ok(prediction) => predictions.push(prediction),
                Err(e) => failures.push(BatchFailure {
                    post_id,
                    error: e.to_string(),
                }),
            }
        }

        if predictions.is_empty() && !failures.is_empty() {
            return Err(LlmError::AllFailed {
                n: failures.len(),
                first: failures[0].error.clone(),
            });
        }
        Ok(BatchReport {
            model_id,
            predictions,
            failures,
        })
    }
}

fn backoff_delay(attempt: u32) -> Duration {
    let exp = BACKOFF_BASE.saturating_mul(1u32 << (attempt - 1).min(16));
    let capped = exp.min(BACKOFF_CAP);
    // Up to 25% jitter; randomness here only affects pacing, not outputs.
    let jitter = 1.0 + rand::random::<f64>() * 0.25;
    capped.mul_f64(jitter)
}
