//! Response files written by `query` and read by `evaluate`.
//!
//! Each line is a query record with the expected label and the target's language
//! attached, so a response file can be scored on its own.

use std::path::{Path, PathBuf};

use roofline_core::io::to_canonical_json_line;
use roofline_core::roofline::{Boundedness, Language};
use roofline_llm::{ProviderConfig, QueryRecord};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::CliError;

pub const RESPONSES_EXTENSION: &str = "jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseLine {
    #[serde(flatten)]
    pub record: QueryRecord,
    pub truth: Boundedness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
}

impl ResponseLine {
    /// Sampling configuration label used to group hyperparameter sweeps.
    pub fn config_label(&self) -> String {
        match (self.record.temperature, self.record.top_p) {
            (Some(t), Some(p)) => format!("temperature={t} top_p={p}"),
            _ => "provider defaults".to_string(),
        }
    }
}

fn sanitize(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// `<model>__<family>__<sampling>.jsonl`
pub fn response_file_name(config: &ProviderConfig, family: &str) -> String {
    let sampling = match config.sampling() {
        Some((t, p)) => format!("t{t}_p{p}"),
        None => "default".to_string(),
    };
    format!(
        "{}__{}__{}.{RESPONSES_EXTENSION}",
        sanitize(&config.model_id),
        family,
        sanitize(&sampling)
    )
}

pub fn write_lines(path: &Path, lines: &[ResponseLine]) -> Result<(), CliError> {
    let mut text = String::new();
    for line in lines {
        text.push_str(&to_canonical_json_line(line).map_err(|e| CliError::io(e.to_string()))?);
    }
    Ok(roofline_core::io::write_text(path, &text)?)
}

/// Every response file under `dir`, in path order.
pub fn response_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::io(format!("{} is not a directory", dir.display())));
    }
    let mut files: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|e| e == RESPONSES_EXTENSION))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_lines(path: &Path) -> Result<Vec<ResponseLine>, CliError> {
    let text = roofline_core::io::read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                CliError::validation(format!("{}:{}: malformed response line: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

pub fn read_dir_lines(dir: &Path) -> Result<Vec<ResponseLine>, CliError> {
    let mut out = Vec::new();
    for f in response_files(dir)? {
        out.extend(read_lines(&f)?);
    }
    Ok(out)
}
