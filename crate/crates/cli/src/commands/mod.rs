mod evaluate;
mod pipeline;
mod query;
mod rq1;

pub use evaluate::{evaluate, EvaluateArgs};
pub use pipeline::{build_dataset, export_finetune, ingest, BuildDatasetArgs, ExportFinetuneArgs, IngestArgs};
pub use query::{query, QueryArgs, QueryMode};
pub use rq1::{gen_rq1, GenRq1Args, PROMPTS_FILE, TASKS_FILE};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Snapshot of parsed arguments for the run manifest.
fn snapshot<T: Serialize>(value: &T) -> Result<Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::io(e.to_string()))
}
