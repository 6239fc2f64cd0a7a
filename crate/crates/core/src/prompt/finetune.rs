//! Chat-format fine-tuning records.
//!
//! Each record is one JSON object per line:
//!
//! ```json
//! {"messages":[{"content":"<system>","role":"system"},
//!              {"content":"<user>","role":"user"},
//!              {"content":"Compute","role":"assistant"}]}
//! ```
//!
//! The system and user texts are the zero-shot prompt for the sample; the assistant
//! content is the ground-truth label word.

use serde::{Deserialize, Serialize};

use super::{build_zero_shot_prompt, ChatMessage, PromptError};
use crate::dataset::{DatasetSample, Split};
use crate::roofline::{Boundedness, HardwareSpec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub messages: Vec<ChatMessage>,
}

impl FinetuneRecord {
    /// The assistant answer parsed back into a label.
    pub fn label(&self) -> Result<Boundedness, PromptError> {
        let [system, user, assistant] = self.messages.as_slice() else {
            return Err(PromptError::Record(format!(
                "expected 3 messages, found {}",
                self.messages.len()
            )));
        };
        for (msg, role) in [(system, "system"), (user, "user"), (assistant, "assistant")] {
            if msg.role != role {
                return Err(PromptError::Record(format!(
                    "expected a {role} message, found {}",
                    msg.role
                )));
            }
        }
        assistant
            .content
            .parse()
            .map_err(|_| PromptError::Record(format!("assistant answer {:?} is not a label", assistant.content)))
    }
}

/// One record per sample in `split`. Fails if any sample has no split assigned.
pub fn export_finetune_records(
    samples: &[DatasetSample],
    spec: &HardwareSpec<f64>,
    split: Split,
) -> Result<Vec<FinetuneRecord>, PromptError> {
    if let Some(s) = samples.iter().find(|s| s.split == Split::Unassigned) {
        return Err(PromptError::UnassignedSplit(s.program_id.clone()));
    }
    samples
        .iter()
        .filter(|s| s.split == split)
        .map(|s| {
            let prompt = build_zero_shot_prompt(s, spec)?;
            Ok(FinetuneRecord {
                messages: vec![
                    ChatMessage::new("system", prompt.system_text),
                    ChatMessage::new("user", prompt.user_text),
                    ChatMessage::new("assistant", s.label.as_str()),
                ],
            })
        })
        .collect()
}

pub fn parse_finetune_record(line: &str) -> Result<FinetuneRecord, PromptError> {
    let record: FinetuneRecord = serde_json::from_str(line).map_err(|e| PromptError::Record(e.to_string()))?;
    record.label()?;
    Ok(record)
}
