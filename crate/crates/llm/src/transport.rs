use std::time::Duration;

use async_trait::async_trait;
use serde_json::Value;

/// What a transport needs to issue one chat-completion call.
#[derive(Clone, Debug)]
pub struct ChatRequest {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub body: Value,
    pub timeout: Duration,
}

/// Raw HTTP outcome; interpretation of the status is left to the client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatResponse {
    pub status: u16,
    pub retry_after: Option<Duration>,
    pub body: String,
}

#[async_trait]
pub trait ChatTransport: Send + Sync {
    /// `Err` means no HTTP response was obtained (connection error, timeout).
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, String>;
}

/// HTTP transport over `reqwest`.
#[derive(Clone, Debug, Default)]
pub struct HttpTransport {
    client: reqwest::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

fn parse_retry_after(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    let value = headers.get(reqwest::header::RETRY_AFTER)?.to_str().ok()?;
    let secs: f64 = value.trim().parse().ok()?;
    (secs.is_finite() && secs >= 0.0).then(|| Duration::from_secs_f64(secs))
}

#[async_trait]
impl ChatTransport for HttpTransport {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, String> {
        let mut builder = self
            .client
            .post(&request.endpoint)
            .timeout(request.timeout)
            .json(&request.body);
        if let Some(key) = &request.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await.map_err(|e| e.without_url().to_string())?;
        let status = response.status().as_u16();
        let retry_after = parse_retry_after(response.headers());
        let body = response.text().await.map_err(|e| e.without_url().to_string())?;
        Ok(ChatResponse {
            status,
            retry_after,
            body,
        })
    }
}
