//! Subcommands of the `roofline` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 pipeline constraint violated.

mod commands;
pub mod error;
pub mod manifest;
pub mod responses;

use clap::{Parser, Subcommand};

pub use commands::{
    BuildDatasetArgs, EvaluateArgs, ExportFinetuneArgs, GenRq1Args, IngestArgs, QueryArgs, QueryMode, PROMPTS_FILE,
    TASKS_FILE,
};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "roofline",
    version,
    about = "Roofline classification pipeline for GPU kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse profiler exports and label each program's first kernel.
    Ingest(IngestArgs),
    /// Attach sources, prune by token count, balance and split.
    BuildDataset(BuildDatasetArgs),
    /// Generate random-roofline questions and their prompts.
    GenRq1(GenRq1Args),
    /// Send prompts to a model (or replay cached responses).
    Query(QueryArgs),
    /// Score responses and write the report.
    Evaluate(EvaluateArgs),
    /// Write chat-format fine-tuning records for one split.
    ExportFinetune(ExportFinetuneArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::BuildDataset(a) => commands::build_dataset(a),
        Command::GenRq1(a) => commands::gen_rq1(a),
        Command::Query(a) => commands::query(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::ExportFinetune(a) => commands::export_finetune(a),
    }
}
