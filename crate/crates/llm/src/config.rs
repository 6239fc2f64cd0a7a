use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::LlmError;

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const ENDPOINT_ENV: &str = "ROOFLINE_LLM_ENDPOINT";

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}
fn default_temperature() -> f64 {
    0.1
}
fn default_top_p() -> f64 {
    0.2
}
fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    5
}
fn default_concurrency() -> usize {
    4
}
fn default_backoff_base() -> u64 {
    500
}
fn default_backoff_max() -> u64 {
    60_000
}

/// Provider settings, usually read from a TOML file. The API key is never stored in
/// the file; it is read from the environment variable named by `api_key_env`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    pub model_id: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    /// Reasoning models reject sampling parameters; they are left out of the request.
    #[serde(default)]
    pub reasoning_model: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_effort: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(default = "default_timeout")]
    pub request_timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency_limit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
    #[serde(default = "default_backoff_base")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_backoff_max")]
    pub backoff_max_ms: u64,
    /// USD per million input tokens, for cost estimates only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_price_per_mtok: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_price_per_mtok: Option<f64>,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("endpoint", &self.endpoint)
            .field("model_id", &self.model_id)
            .field("api_key_env", &self.api_key_env)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("temperature", &self.temperature)
            .field("top_p", &self.top_p)
            .field("reasoning_model", &self.reasoning_model)
            .field("reasoning_effort", &self.reasoning_effort)
            .field("max_output_tokens", &self.max_output_tokens)
            .field("request_timeout_s", &self.request_timeout_s)
            .field("max_retries", &self.max_retries)
            .field("concurrency_limit", &self.concurrency_limit)
            .field("requests_per_minute", &self.requests_per_minute)
            .finish_non_exhaustive()
    }
}

impl ProviderConfig {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self::from_toml_str(&format!("model_id = {:?}", model_id.into())).expect("minimal config parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LlmError> {
        let config: Self = toml::from_str(text).map_err(|e| LlmError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file, then applies the endpoint override and API key from the environment.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            LlmError::Config(m) => LlmError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        config.apply_env();
        Ok(config)
    }

    pub fn apply_env(&mut self) {
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            if !endpoint.trim().is_empty() {
                self.endpoint = endpoint;
            }
        }
        self.api_key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let fail = |m: String| Err(LlmError::Config(m));
        if self.model_id.trim().is_empty() {
            return fail("model_id is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return fail(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return fail(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.concurrency_limit == 0 {
            return fail("concurrency_limit must be at least 1".into());
        }
        if self.requests_per_minute == Some(0) {
            return fail("requests_per_minute must be at least 1".into());
        }
        if !(self.request_timeout_s.is_finite() && self.request_timeout_s > 0.0) {
            return fail(format!("request_timeout_s {} must be positive", self.request_timeout_s));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_s)
    }

    /// Sampling parameters actually sent, `None` for reasoning models.
    pub fn sampling(&self) -> Option<(f64, f64)> {
        (!self.reasoning_model).then_some((self.temperature, self.top_p))
    }
}
