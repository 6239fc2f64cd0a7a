use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use rand::Rng;
use roofline_core::prompt::PromptBundle;
use serde_json::Value;
use tokio::sync::Mutex;
use tracing::{debug, warn};

use crate::cache::ResponseCache;
use crate::config::ProviderConfig;
use crate::record::{request_body, request_hash, ErrorKind, QueryError, QueryRecord, TokenUsage};
use crate::transport::{ChatRequest, ChatResponse, ChatTransport, HttpTransport};

/// Spaces request starts at least `60 / rpm` seconds apart.
#[derive(Debug)]
struct RateLimiter {
    interval: Option<Duration>,
    next: Mutex<Option<tokio::time::Instant>>,
}

impl RateLimiter {
    fn new(rpm: Option<u32>) -> Self {
        Self {
            interval: rpm.map(|r| Duration::from_secs_f64(60.0 / f64::from(r))),
            next: Mutex::new(None),
        }
    }

    async fn acquire(&self) {
        let Some(interval) = self.interval else { return };
        let wait_until = {
            let mut next = self.next.lock().await;
            let now = tokio::time::Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + interval);
            slot
        };
        tokio::time::sleep_until(wait_until).await;
    }
}

enum Attempt {
    Done(String, Option<TokenUsage>),
    Retry(QueryError, Option<Duration>),
    Fail(QueryError),
}

fn decode(body: &str) -> Result<(String, Option<TokenUsage>), String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or("response has no choices[0].message.content")?;
    let usage = v
        .get("usage")
        .and_then(|u| serde_json::from_value::<TokenUsage>(u.clone()).ok());
    Ok((text.to_string(), usage))
}

fn classify(outcome: Result<ChatResponse, String>) -> Attempt {
    let response = match outcome {
        Ok(r) => r,
        Err(message) => {
            return Attempt::Retry(
                QueryError {
                    kind: ErrorKind::Transport,
                    message,
                    status: None,
                },
                None,
            )
        }
    };
    let status = response.status;
    let error = |kind, message: String| QueryError {
        kind,
        message,
        status: Some(status),
    };
    let snippet: String = response.body.chars().take(300).collect();
    match status {
        200..=299 => match decode(&response.body) {
            Ok((text, usage)) => Attempt::Done(text, usage),
            Err(m) => Attempt::Fail(error(ErrorKind::Decode, m)),
        },
        408 | 429 | 500..=599 => Attempt::Retry(
            error(ErrorKind::Transport, format!("HTTP {status}: {snippet}")),
            response.retry_after,
        ),
        _ => Attempt::Fail(error(ErrorKind::Permanent, format!("HTTP {status}: {snippet}"))),
    }
}

/// Chat-completion client with caching, retries, rate limiting and replay.
pub struct LlmClient {
    config: ProviderConfig,
    transport: Arc<dyn ChatTransport>,
    cache: Option<ResponseCache>,
    replay: bool,
    limiter: RateLimiter,
    network_calls: AtomicU64,
}

impl LlmClient {
    pub fn new(config: ProviderConfig, transport: Arc<dyn ChatTransport>) -> Self {
        let limiter = RateLimiter::new(config.requests_per_minute);
        Self {
            config,
            transport,
            cache: None,
            replay: false,
            limiter,
            network_calls: AtomicU64::new(0),
        }
    }

    pub fn http(config: ProviderConfig) -> Self {
        Self::new(config, Arc::new(HttpTransport::new()))
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Serve only from the cache; misses become `replay_miss` error records.
    pub fn replay(mut self, replay: bool) -> Self {
        self.replay = replay;
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// HTTP attempts made so far.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    fn backoff(&self, attempt: u32, suggested: Option<Duration>) -> Duration {
        if let Some(d) = suggested {
            return d;
        }
        let base = self.config.backoff_base_ms.saturating_mul(1u64 << attempt.min(20));
        let capped = base.min(self.config.backoff_max_ms);
        let jittered = rand::rng().random_range(capped / 2..=capped.max(1));
        Duration::from_millis(jittered)
    }

    pub async fn send(&self, bundle: &PromptBundle) -> QueryRecord {
        let body = request_body(bundle, &self.config);
        let hash = request_hash(&body);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.lookup(&hash)) {
            debug!(bundle = %bundle.id, "cache hit");
            return hit;
        }
        let mut record = QueryRecord::skeleton(bundle, &self.config, hash);
        if self.replay {
            record.error = Some(QueryError {
                kind: ErrorKind::ReplayMiss,
                message: format!("no cached response for {}", bundle.id),
                status: None,
            });
            return record;
        }

        let request = ChatRequest {
            endpoint: self.config.endpoint.clone(),
            api_key: self.config.api_key.clone(),
            body,
            timeout: self.config.timeout(),
        };
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            self.limiter.acquire().await;
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            attempt += 1;
            match classify(self.transport.complete(&request).await) {
                Attempt::Done(text, usage) => {
                    record.response_text = Some(text);
                    record.usage = usage;
                    break;
                }
                Attempt::Fail(e) => {
                    record.error = Some(e);
                    break;
                }
                Attempt::Retry(e, suggested) => {
                    if attempt > self.config.max_retries {
                        record.error = Some(e);
                        break;
                    }
                    let delay = self.backoff(attempt - 1, suggested);
                    warn!(bundle = %bundle.id, attempt, "retrying in {delay:?}: {}", e.message);
                    tokio::time::sleep(delay).await;
                }
            }
        }
        record.attempts = attempt;
        record.latency_ms = started.elapsed().as_millis() as u64;

        if let (Some(cache), true) = (&self.cache, record.is_ok()) {
            if let Err(e) = cache.store(&record) {
                warn!(bundle = %bundle.id, "could not cache response: {e}");
            }
        }
        record
    }

    /// One record per bundle, in input order, with at most `concurrency_limit` in flight.
    pub async fn send_batch(&self, bundles: &[PromptBundle]) -> Vec<QueryRecord> {
        stream::iter(bundles)
            .map(|b| self.send(b))
            .buffered(self.config.concurrency_limit)
            .collect()
            .await
    }
}
