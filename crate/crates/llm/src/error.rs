//! Error taxonomy of the annotation client.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited by the provider after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("unparseable model response: {raw:?}")]
    UnparseableResponse { raw: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("offline mode and no cached response for this prompt")]
    OfflineCacheMiss,
    #[error("cache error: {0}")]
    Cache(String),
    #[error("prompt construction failed: {0}")]
    Prompt(String),
    #[error("parallelism must be >= 1")]
    InvalidParallelism,
    #[error("all {n} posts failed; first error: {first}")]
    AllFailed { n: usize, first: String },
}
