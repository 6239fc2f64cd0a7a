//! Token counting behind a small trait so the exact vocabulary can be swapped.

use std::sync::Arc;

use tracing::warn;

pub trait TokenCounter: Send + Sync {
    /// Identifier recorded in dataset metadata.
    fn id(&self) -> &str;
    fn count(&self, text: &str) -> usize;
    /// False for estimators.
    fn is_exact(&self) -> bool;
}

/// `ceil(chars / 4)`; an approximation used when no vocabulary is available.
#[derive(Clone, Copy, Debug, Default)]
pub struct CharEstimate;

pub const ESTIMATE_ID: &str = "estimate-chars/4";

impl TokenCounter for CharEstimate {
    fn id(&self) -> &str {
        ESTIMATE_ID
    }

    fn count(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// BPE vocabularies shipped with `tiktoken-rs`.
pub struct Bpe {
    id: String,
    bpe: tiktoken_rs::CoreBPE,
}

impl TokenCounter for Bpe {
    fn id(&self) -> &str {
        &self.id
    }

    fn count(&self, text: &str) -> usize {
        self.bpe.encode_with_special_tokens(text).len()
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Resolves a tokenizer id. Model names map to their vocabulary (`gpt-4o-mini` →
/// `o200k_base`). Unknown ids and load failures fall back to [`CharEstimate`] with a
/// warning.
pub fn tokenizer_for(id: &str) -> Arc<dyn TokenCounter> {
    let vocab = match id {
        "estimate" | ESTIMATE_ID => return Arc::new(CharEstimate),
        "o200k_base" | "gpt-4o" | "gpt-4o-mini" | "o1" | "o1-mini" | "o3-mini" => "o200k_base",
        "cl100k_base" | "gpt-4" | "gpt-3.5-turbo" => "cl100k_base",
        other => {
            warn!(
                tokenizer = other,
                "unknown tokenizer; using the approximate character estimate"
            );
            return Arc::new(CharEstimate);
        }
    };
    let loaded = match vocab {
        "o200k_base" => tiktoken_rs::o200k_base(),
        _ => tiktoken_rs::cl100k_base(),
    };
    match loaded {
        Ok(bpe) => Arc::new(Bpe {
            id: vocab.to_string(),
            bpe,
        }),
        Err(e) => {
            warn!(tokenizer = vocab, error = %e, "tokenizer failed to load; using the approximate character estimate");
            Arc::new(CharEstimate)
        }
    }
}
