//! Chat-completion client used to query models with generated prompts.

mod cache;
mod client;
mod config;
mod record;
mod transport;

pub use cache::ResponseCache;
pub use client::LlmClient;
pub use config::{ProviderConfig, DEFAULT_ENDPOINT, ENDPOINT_ENV};
pub use record::{
    estimated_cost, request_body, request_hash, ErrorKind, QueryError, QueryRecord, TokenUsage, RECORD_SCHEMA_VERSION,
};
pub use transport::{ChatRequest, ChatResponse, ChatTransport, HttpTransport};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("provider config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}
