//! Minimum-spacing rate limiter: request starts are at least
//! `60 / requests_per_minute` seconds apart, shared across all tasks.

use std::time::Duration;
use tokio::sync::Mutex;
use tokio::time::Instant;

#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_start: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: f64) -> RateLimiter {
        assert!(requests_per_minute > 0.0);
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / requests_per_minute),
            next_start: Mutex::new(None),
        }
    }

    /// Wait until a request may start. Slots are handed out in call order.
    pub async fn acquire(&self) {
        let start = {
            let mut next = self.next_start.lock().await;
            let now = Instant::now();
            let start = match *next {
                Some(at) if at > now => at,
                _ => now,
            };
            *next = Some(start + self.interval);
            start
        };
        tokio::time::sleep_until(start).await;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[tokio::test(start_paused = true)]
    async fn spaces_requests_by_the_configured_interval() {
        // 120 requests/minute -> 500 ms spacing.
        let limiter = Arc::new(RateLimiter::new(120.0));
        let t0 = Instant::now();
        let mut offsets = Vec::new();
        for _ in 0..4 {
            limiter.acquire().await;
            offsets.push(t0.elapsed().as_millis());
        }
        assert_eq!(offsets, vec![0, 500, 1000, 1500]);
    }

    #[tokio::test(start_paused = true)]
    async fn concurrent_acquires_never_exceed_the_rate() {
        let limiter = Arc::new(RateLimiter::new(600.0)); // 100 ms spacing
        let t0 = Instant::now();
        let mut handles = Vec::new();
        for _ in 0..10 {
            let limiter = limiter.clone();
            handles.push(tokio::spawn(async move {
                limiter.acquire().await;
                t0.elapsed().as_millis()
            }));
        }
        let mut starts = Vec::new();
        for handle in handles {
            starts.push(handle.await.unwrap());
        }
        starts.sort_unstable();
        for pair in starts.windows(2) {
            assert!(pair[1] - pair[0] >= 100, "starts too close: {starts:?}");
        }
    }
}
