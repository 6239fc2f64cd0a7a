//! Real labeled programs used as few-shot examples.
//!
//! Layout on disk:
//!
//! ```text
//! <bank>/manifest.toml
//! <bank>/<cuda|omp>/<compute|bandwidth>/<program_id>/...source files
//! ```
//!
//! with one `[[example]]` table per program in the manifest (`program_id`,
//! `language`, `label`, optional `kernel_name`).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::dataset::{scrape_sources, DatasetSample};
use crate::roofline::{Boundedness, Language};

pub const BANK_MANIFEST: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub program_id: String,
    pub language: Language,
    pub label: Boundedness,
    #[serde(default)]
    pub kernel_name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankManifest {
    #[serde(rename = "example", default)]
    pub examples: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BankExample {
    pub program_id: String,
    pub language: Language,
    pub label: Boundedness,
    pub kernel_name: Option<String>,
    pub source_text: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExampleBank {
    examples: Vec<BankExample>,
}

impl ExampleBank {
    pub fn new(mut examples: Vec<BankExample>) -> Self {
        examples.sort_by(|a, b| a.program_id.cmp(&b.program_id));
        Self { examples }
    }

    pub fn load(dir: &Path, extensions: &[String]) -> Result<Self, PromptError> {
        let manifest_path = dir.join(BANK_MANIFEST);
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| PromptError::Bank(format!("{}: {e}", manifest_path.display())))?;
        let manifest: BankManifest =
            toml::from_str(&text).map_err(|e| PromptError::Bank(format!("{}: {e}", manifest_path.display())))?;
        let mut seen = BTreeSet::new();
        let mut examples = Vec::with_capacity(manifest.examples.len());
        for entry in manifest.examples {
            if !seen.insert(entry.program_id.clone()) {
                return Err(PromptError::Bank(format!("{} listed twice", entry.program_id)));
            }
            let src_dir = dir
                .join(entry.language.as_str().to_ascii_lowercase())
                .join(entry.label.as_str().to_ascii_lowercase())
                .join(&entry.program_id);
            let source_text = scrape_sources(&src_dir, extensions).map_err(|e| PromptError::Bank(e.to_string()))?;
            examples.push(BankExample {
                program_id: entry.program_id,
                language: entry.language,
                label: entry.label,
                kernel_name: entry.kernel_name,
                source_text,
            });
        }
        Ok(Self::new(examples))
    }

    pub fn examples(&self) -> &[BankExample] {
        &self.examples
    }

    /// First example (by program id) of the given language and class.
    pub fn pick(&self, language: Language, label: Boundedness) -> Result<&BankExample, PromptError> {
        self.examples
            .iter()
            .find(|e| e.language == language && e.label == label)
            .ok_or(PromptError::MissingExample { language, label })
    }

    /// Fails when a bank program also appears among `samples`.
    pub fn ensure_disjoint<'a>(&self, samples: impl IntoIterator<Item = &'a DatasetSample>) -> Result<(), PromptError> {
        let ids: BTreeSet<&str> = self.examples.iter().map(|e| e.program_id.as_str()).collect();
        match samples.into_iter().find(|s| ids.contains(s.program_id.as_str())) {
            Some(s) => Err(PromptError::BankOverlap(s.program_id.clone())),
            None => Ok(()),
        }
    }

    /// Fails unless every (language, class) pair has an example.
    pub fn ensure_complete(&self) -> Result<(), PromptError> {
        for language in Language::ALL {
            for label in Boundedness::ALL {
                self.pick(language, label)?;
            }
        }
        Ok(())
    }
}
