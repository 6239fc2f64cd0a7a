use roofline_core::io::to_canonical_json;
use roofline_core::prompt::{PromptBundle, PromptMode};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ProviderConfig;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Network failure or retryable status after all retries.
    Transport,
    /// Non-retryable HTTP status.
    Permanent,
    /// Response body without a usable completion.
    Decode,
    /// Replay mode and nothing cached for this request.
    ReplayMiss,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
}

/// One request/response pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub schema_version: u32,
    pub request_hash: String,
    pub bundle_id: String,
    pub target_id: String,
    pub mode: PromptMode,
    pub shots: u32,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
    pub latency_ms: u64,
    pub timestamp: String,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<QueryError>,
}

impl QueryRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.response_text.is_some()
    }

    /// A record for `bundle` that has not been sent yet: hash, ids and sampling filled in.
    pub fn unsent(bundle: &PromptBundle, config: &ProviderConfig) -> Self {
        Self::skeleton(bundle, config, request_hash(&request_body(bundle, config)))
    }

    pub(crate) fn skeleton(bundle: &PromptBundle, config: &ProviderConfig, request_hash: String) -> Self {
        let sampling = config.sampling();
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            request_hash,
            bundle_id: bundle.id.clone(),
            target_id: bundle.target_id.clone(),
            mode: bundle.mode,
            shots: bundle.shots,
            model_id: config.model_id.clone(),
            temperature: sampling.map(|s| s.0),
            top_p: sampling.map(|s| s.1),
            response_text: None,
            usage: None,
            latency_ms: 0,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            attempts: 0,
            error: None,
        }
    }
}

/// Chat-completion request body. Sampling parameters are omitted for reasoning models.
pub fn request_body(bundle: &PromptBundle, config: &ProviderConfig) -> Value {
    let mut body = json!({
        "model": config.model_id,
        "messages": bundle.messages(),
    });
    let obj = body.as_object_mut().expect("object literal");
    if let Some((temperature, top_p)) = config.sampling() {
        obj.insert("temperature".into(), json!(temperature));
        obj.insert("top_p".into(), json!(top_p));
    }
    if let Some(effort) = &config.reasoning_effort {
        obj.insert("reasoning_effort".into(), json!(effort));
    }
    if let Some(max) = config.max_output_tokens {
        obj.insert("max_completion_tokens".into(), json!(max));
    }
    body
}

/// SHA-256 (hex) of the canonical request body: model, full prompt and every sampling parameter.
pub fn request_hash(body: &Value) -> String {
    let canonical = to_canonical_json(body).expect("JSON values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Estimated spend in USD when prices are configured.
pub fn estimated_cost(records: &[QueryRecord], config: &ProviderConfig) -> Option<f64> {
    let (input, output) = (config.input_price_per_mtok?, config.output_price_per_mtok?);
    let (p, c) = records
        .iter()
        .filter_map(|r| r.usage)
        .fold((0u64, 0u64), |(p, c), u| (p + u.prompt_tokens, c + u.completion_tokens));
    Some((p as f64 * input + c as f64 * output) / 1e6)
}
