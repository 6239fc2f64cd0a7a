use std::io::Write;
use std::path::{Path, PathBuf};

use roofline_core::io::to_canonical_json;
use tracing::warn;

use crate::record::{QueryRecord, RECORD_SCHEMA_VERSION};
use crate::LlmError;

/// Content-addressed store of successful responses at `<root>/<hash[..2]>/<hash>`.
#[derive(Clone, Debug)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, request_hash: &str) -> PathBuf {
        let prefix = request_hash.get(..2).unwrap_or(request_hash);
        self.root.join(prefix).join(request_hash)
    }

    /// The stored record, or `None` on a miss. Unreadable or corrupt entries are misses.
    pub fn lookup(&self, request_hash: &str) -> Option<QueryRecord> {
        let path = self.entry_path(request_hash);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                warn!(path = %path.display(), "unreadable cache entry treated as a miss: {e}");
                return None;
            }
        };
        match serde_json::from_str::<QueryRecord>(&text) {
            Ok(r) if r.schema_version == RECORD_SCHEMA_VERSION && r.request_hash == request_hash => Some(r),
            Ok(_) => {
                warn!(path = %path.display(), "cache entry does not match its key, treated as a miss");
                None
            }
            Err(e) => {
                warn!(path = %path.display(), "corrupt cache entry treated as a miss: {e}");
                None
            }
        }
    }

    /// Writes the record atomically (temp file in the same directory, then rename).
    pub fn store(&self, record: &QueryRecord) -> Result<(), LlmError> {
        let path = self.entry_path(&record.request_hash);
        let dir = path.parent().expect("entry has a parent directory");
        let io = |e: std::io::Error| LlmError::Io(format!("{}: {e}", path.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let text = to_canonical_json(record).map_err(|e| LlmError::Io(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(text.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }
}
