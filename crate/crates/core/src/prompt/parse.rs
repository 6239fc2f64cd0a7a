use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::roofline::Boundedness;

static KEYWORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(compute|bandwidth)(?:-bound)?\b").expect("valid keyword pattern"));
static ANSWER_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\banswer\s*:").expect("valid marker pattern"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    Compute,
    Bandwidth,
    Invalid,
}

impl Prediction {
    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::Compute => "Compute",
            Prediction::Bandwidth => "Bandwidth",
            Prediction::Invalid => "Invalid",
        }
    }

    pub fn boundedness(self) -> Option<Boundedness> {
        match self {
            Prediction::Compute => Some(Boundedness::Compute),
            Prediction::Bandwidth => Some(Boundedness::Bandwidth),
            Prediction::Invalid => None,
        }
    }

    pub fn is_invalid(self) -> bool {
        self == Prediction::Invalid
    }
}

impl From<Boundedness> for Prediction {
    fn from(b: Boundedness) -> Self {
        match b {
            Boundedness::Compute => Prediction::Compute,
            Boundedness::Bandwidth => Prediction::Bandwidth,
        }
    }
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    pub raw_text: String,
    pub prediction: Prediction,
    /// The keyword occurrence that decided the prediction; empty when invalid.
    pub matched_span: String,
}

fn keyword_prediction(m: &regex::Match<'_>) -> Prediction {
    if m.as_str().as_bytes()[0].eq_ignore_ascii_case(&b'c') {
        Prediction::Compute
    } else {
        Prediction::Bandwidth
    }
}

fn build(raw: &str, hit: Option<regex::Match<'_>>) -> ParsedPrediction {
    match hit {
        Some(m) => ParsedPrediction {
            raw_text: raw.to_string(),
            prediction: keyword_prediction(&m),
            matched_span: m.as_str().to_string(),
        },
        None => ParsedPrediction {
            raw_text: raw.to_string(),
            prediction: Prediction::Invalid,
            matched_span: String::new(),
        },
    }
}

/// Case-insensitive scan where the last `Compute`/`Bandwidth` keyword wins.
pub fn parse_classification_response(raw_text: &str) -> ParsedPrediction {
    build(raw_text, KEYWORD.find_iter(raw_text).last())
}

/// Keyword right after the final `Answer:` marker, falling back to the last keyword anywhere.
pub fn parse_rq1_response(raw_text: &str) -> ParsedPrediction {
    if let Some(marker) = ANSWER_MARKER.find_iter(raw_text).last() {
        if let Some(m) = KEYWORD.find_at(raw_text, marker.end()) {
            return build(raw_text, Some(m));
        }
    }
    parse_classification_response(raw_text)
}
