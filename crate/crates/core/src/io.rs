//! Shared file helpers: canonical JSON output and versioned document checks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::roofline::HardwareSpec;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed content at line {line}, column {column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: missing schema_version field")]
    MissingVersion { path: PathBuf },
    #[error("{path}: schema_version {found} is not supported (expected {expected})")]
    VersionMismatch { path: PathBuf, found: u64, expected: u32 },
}

impl FileError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FileError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(path: &Path, message: impl Into<String>) -> Self {
        FileError::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    fn from_json(path: &Path, err: serde_json::Error) -> Self {
        if err.is_syntax() || err.is_eof() {
            FileError::Syntax {
                path: path.to_path_buf(),
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            }
        } else {
            FileError::invalid(path, err.to_string())
        }
    }

    /// True for I/O failures, false for content problems.
    pub fn is_io(&self) -> bool {
        matches!(self, FileError::Io { .. })
    }
}

/// Pretty JSON with object keys sorted at every level and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let value = sort_keys(serde_json::to_value(value)?);
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

/// Single-line variant of [`to_canonical_json`] for line-delimited files.
pub fn to_canonical_json_line<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut line = serde_json::to_string(&sort_keys(serde_json::to_value(value)?))?;
    line.push('\n');
    Ok(line)
}

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::new();
            for (k, v) in entries {
                sorted.insert(k, sort_keys(v));
            }
            Value::Object(sorted)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| FileError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| FileError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|e| FileError::io(path, e))
}

/// Writes `value` as canonical JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let text = to_canonical_json(value).map_err(|e| FileError::invalid(path, e.to_string()))?;
    write_text(path, &text)
}

/// Parses a JSON document carrying a top-level `schema_version` equal to `expected`.
pub fn parse_versioned<T: DeserializeOwned>(path: &Path, text: &str, expected: u32) -> Result<T, FileError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| FileError::from_json(path, e))?;
    match raw.get("schema_version") {
        None => {
            return Err(FileError::MissingVersion {
                path: path.to_path_buf(),
            })
        }
        Some(v) => {
            let found = v
                .as_u64()
                .ok_or_else(|| FileError::invalid(path, "schema_version must be an integer"))?;
            if found != u64::from(expected) {
                return Err(FileError::VersionMismatch {
                    path: path.to_path_buf(),
                    found,
                    expected,
                });
            }
        }
    }
    serde_json::from_value(raw).map_err(|e| FileError::invalid(path, e.to_string()))
}

pub fn read_versioned<T: DeserializeOwned>(path: &Path, expected: u32) -> Result<T, FileError> {
    parse_versioned(path, &read_text(path)?, expected)
}

pub fn parse_toml<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, FileError> {
    toml::from_str(text).map_err(|e| FileError::invalid(path, e.to_string()))
}

/// Loads and validates a hardware description such as
///
/// ```toml
/// name = "NVIDIA GeForce RTX 3080"
/// bandwidth_gbs = 760.3
/// [peak]
/// SP = 29770
/// DP = 465
/// INT = 14880
/// ```
pub fn load_hardware_spec(path: &Path) -> Result<HardwareSpec<f64>, FileError> {
    let spec: HardwareSpec<f64> = parse_toml(path, &read_text(path)?)?;
    spec.validate().map_err(|e| FileError::invalid(path, e.to_string()))?;
    Ok(spec)
}
