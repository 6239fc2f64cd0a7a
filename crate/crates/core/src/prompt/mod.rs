//! Prompt construction and response parsing.
//!
//! Three prompt families are produced: random-roofline questions with worked examples
//! (optionally with chain-of-thought), a zero-shot source-code prompt with pseudo-code
//! examples, and a two-shot variant with real language-matched examples.

mod bank;
mod classify;
mod finetune;
mod parse;
mod rq1;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roofline::{Boundedness, Language};

pub use bank::{BankExample, BankManifest, ExampleBank, BANK_MANIFEST};
pub use classify::{build_few_shot_prompt, build_zero_shot_prompt, SYSTEM_PREAMBLE};
pub use finetune::{export_finetune_records, parse_finetune_record, FinetuneRecord};
pub use parse::{parse_classification_response, parse_rq1_response, ParsedPrediction, Prediction};
pub use rq1::{build_rq1_prompt, gen_random_rooflines, render_question, render_thought, RandomRooflineTask, Rq1Ranges};

pub const ANSWER_VOCABULARY: [&str; 2] = ["Compute", "Bandwidth"];

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{mode} prompts take {allowed} shots, got {shots}")]
    InvalidShots {
        mode: PromptMode,
        shots: u32,
        allowed: &'static str,
    },
    #[error("template placeholder {0} has no value")]
    MissingField(&'static str),
    #[error("example bank has no {language} {label} example")]
    MissingExample { language: Language, label: Boundedness },
    #[error("example bank program {0} is also part of the dataset")]
    BankOverlap(String),
    #[error("example bank: {0}")]
    Bank(String),
    #[error("sample {0} has no split assigned")]
    UnassignedSplit(String),
    #[error("malformed fine-tune record: {0}")]
    Record(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Rq1Cot,
    Rq1Plain,
    ZeroShot,
    FewShot,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::Rq1Cot => "rq1_cot",
            PromptMode::Rq1Plain => "rq1_plain",
            PromptMode::ZeroShot => "zero_shot",
            PromptMode::FewShot => "few_shot",
        }
    }

    pub fn is_rq1(self) -> bool {
        matches!(self, PromptMode::Rq1Cot | PromptMode::Rq1Plain)
    }

    pub fn check_shots(self, shots: u32) -> Result<(), PromptError> {
        let (ok, allowed) = match self {
            PromptMode::Rq1Cot | PromptMode::Rq1Plain => (matches!(shots, 2 | 4 | 8), "2, 4 or 8"),
            PromptMode::ZeroShot => (shots == 0, "0"),
            PromptMode::FewShot => (shots == 2, "2"),
        };
        if ok {
            Ok(())
        } else {
            Err(PromptError::InvalidShots {
                mode: self,
                shots,
                allowed,
            })
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rq1_cot" => Ok(PromptMode::Rq1Cot),
            "rq1_plain" => Ok(PromptMode::Rq1Plain),
            "zero_shot" => Ok(PromptMode::ZeroShot),
            "few_shot" => Ok(PromptMode::FewShot),
            other => Err(format!("unknown prompt mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// A ready-to-send prompt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub id: String,
    pub mode: PromptMode,
    /// Worked examples embedded in the prompt (real examples for few-shot).
    pub shots: u32,
    pub target_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    pub system_text: String,
    pub user_text: String,
}

impl PromptBundle {
    pub fn validate(&self) -> Result<(), PromptError> {
        self.mode.check_shots(self.shots)
    }

    /// System message (omitted when empty) followed by the user message.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = Vec::with_capacity(2);
        if !self.system_text.is_empty() {
            out.push(ChatMessage::new("system", &self.system_text));
        }
        out.push(ChatMessage::new("user", &self.user_text));
        out
    }
}

/// Two-decimal display with trailing zeros removed: `45.90` → `45.9`, `0.60` → `0.6`.
pub fn display2(value: f64) -> String {
    let s = format!("{value:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Rounds to the nearest value with two decimals.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}
