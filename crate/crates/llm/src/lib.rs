//! Chat-completions annotation client: drives any `/chat/completions`-shaped
//! HTTP endpoint (or the bundled deterministic mock) to label posts, with a
//! disk cache keyed by prompt digest, exponential-backoff retries, a global
//! request-rate limit, and bounded batch parallelism.

mod batch;
mod cache;
mod config;
mod error;
mod limiter;
mod parse;
mod provider;

pub use batch::{Annotator, BatchFailure, BatchReport};
pub use cache::{cache_digest, CacheEntry, DiskCache};
pub use config::ProviderConfig;
pub use error::LlmError;
pub use limiter::RateLimiter;
pub use parse::{parse_response, ParsedResponse, ResponseParseError};
pub use provider::{
    ChatRequest, HttpProvider, MockProvider, OfflineProvider, Provider, ProviderError,
};

/// Version of the expected reply schema; part of every cache key so schema
/// changes never serve stale cached replies.
pub const RESPONSE_SCHEMA_VERSION: u32 = 1;
