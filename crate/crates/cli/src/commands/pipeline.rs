use std::path::{Path, PathBuf};

use clap::Args;
use roofline_core::dataset::{
    build_dataset as run_build, BuildConfig, Dataset, Split, SplitFraction, DEFAULT_EXTENSIONS,
};
use roofline_core::ingest::{ingest_exports, label_programs, IngestConfig, ProfilesFile, PROFILES_SCHEMA_VERSION};
use roofline_core::io::{load_hardware_spec, to_canonical_json_line, write_text};
use roofline_core::prompt::export_finetune_records;
use roofline_core::roofline::Boundedness;
use roofline_core::tokenizer::tokenizer_for;
use serde::Serialize;

use super::snapshot;
use crate::error::CliError;
use crate::manifest::{sidecar_for, RunManifest};

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Directory of profiler exports (`*.csv`), or a single export file.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Hardware spec TOML.
    #[arg(long)]
    pub hardware: PathBuf,
    /// Metric mapping TOML; the built-in canonical names are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn export_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::validation(format!(
            "no .csv profiler exports in {}",
            path.display()
        )));
    }
    Ok(files)
}

pub fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let spec = load_hardware_spec(&args.hardware)?;
    let config = match &args.config {
        Some(p) => IngestConfig::load(p)?,
        None => IngestConfig::default(),
    };
    let files = export_files(&args.profiles)?;
    let outcome = ingest_exports(&files, &config)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let programs = label_programs(&outcome.profiles, &spec)?;
    let file = ProfilesFile {
        schema_version: PROFILES_SCHEMA_VERSION,
        hardware: spec,
        bytes_per_transaction: config.bytes_per_transaction,
        programs: programs.into_values().collect(),
    };
    file.save(&args.out)?;

    let bandwidth = file
        .programs
        .iter()
        .filter(|p| p.roofline.label == Boundedness::Bandwidth)
        .count();
    println!(
        "ingested {} programs from {} export(s): {} compute-bound, {} bandwidth-bound; {} unmapped metric rows",
        file.programs.len(),
        files.len(),
        file.programs.len() - bandwidth,
        bandwidth,
        outcome.ignored_rows
    );

    let mut manifest = RunManifest::new("ingest", snapshot(&args)?);
    manifest.input(&args.profiles)?.input(&args.hardware)?;
    if let Some(c) = &args.config {
        manifest.input(c)?;
    }
    manifest.output(&args.out).write(&sidecar_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct BuildDatasetArgs {
    /// Labeled profiles written by `ingest`.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Root directory holding one source directory per program id.
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long, default_value_t = 8000)]
    pub token_cutoff: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training fraction per combination, as a decimal (`0.8`) or a ratio (`4/5`).
    #[arg(long, default_value = "4/5")]
    #[serde(serialize_with = "display")]
    pub split: SplitFraction,
    /// Model name or tokenizer vocabulary used for token counts (`estimate` for chars/4).
    #[arg(long, default_value = "gpt-4o-mini")]
    pub tokenizer: String,
    /// Source file extensions to include.
    #[arg(long, value_delimiter = ',')]
    pub extensions: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn build_dataset(args: BuildDatasetArgs) -> Result<(), CliError> {
    let profiles = ProfilesFile::load(&args.profiles)?;
    if !args.sources.is_dir() {
        return Err(CliError::io(format!(
            "source root {} is not a directory",
            args.sources.display()
        )));
    }
    let config = BuildConfig {
        token_cutoff: args.token_cutoff,
        seed: args.seed,
        split_fraction: args.split,
        tokenizer_id: args.tokenizer.clone(),
        extensions: args
            .extensions
            .clone()
            .unwrap_or_else(|| DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect()),
    };
    let tokenizer = tokenizer_for(&config.tokenizer_id);
    let outcome = run_build(
        &profiles.programs,
        &args.sources,
        &profiles.hardware,
        &config,
        tokenizer.as_ref(),
    )?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    outcome.dataset.save(&args.out)?;
    println!("{}", outcome.dataset.metadata.counts);

    let mut manifest = RunManifest::new("build-dataset", snapshot(&args)?);
    manifest
        .input(&args.profiles)?
        .input(&args.sources)?
        .seed("seed", args.seed)
        .output(&args.out);
    manifest.write(&sidecar_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct ExportFinetuneArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "train")]
    #[serde(serialize_with = "display")]
    pub split: Split,
    /// Hardware spec TOML; defaults to the spec recorded in the dataset.
    #[arg(long)]
    pub hardware: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn export_finetune(args: ExportFinetuneArgs) -> Result<(), CliError> {
    let dataset = Dataset::load(&args.dataset)?;
    let spec = match &args.hardware {
        Some(p) => load_hardware_spec(p)?,
        None => dataset.metadata.hardware.clone(),
    };
    let records = export_finetune_records(&dataset.samples, &spec, args.split)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&to_canonical_json_line(r).map_err(|e| CliError::io(e.to_string()))?);
    }
    write_text(&args.out, &text)?;
    println!(
        "wrote {} {} records to {}",
        records.len(),
        args.split,
        args.out.display()
    );

    let mut manifest = RunManifest::new("export-finetune", snapshot(&args)?);
    manifest.input(&args.dataset)?;
    if let Some(h) = &args.hardware {
        manifest.input(h)?;
    }
    manifest.output(&args.out).write(&sidecar_for(&args.out))
}
