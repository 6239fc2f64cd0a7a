//! Balanced, token-pruned classification dataset built from labeled programs.
//!
//! Pipeline: scrape each program's sources into one string, count tokens, drop
//! programs above the cutoff, down-sample every (language, class) combination to the
//! smallest one, then split each combination into train and validation parts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::ingest::LabeledProgram;
use crate::io::FileError;
use crate::roofline::{Boundedness, Dim3, HardwareSpec, KernelProfile, Language, PerOp};
use crate::tokenizer::TokenCounter;

pub const DATASET_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_EXTENSIONS: [&str; 10] = ["c", "cc", "cpp", "cxx", "cu", "cuh", "h", "hh", "hpp", "hxx"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no source files with an allowed extension under {0}")]
    EmptyProgram(PathBuf),
    #[error("source directory {0} does not exist")]
    MissingSources(PathBuf),
    #[error("cannot balance: no samples for {language}/{label}")]
    EmptyCombination { language: Language, label: Boundedness },
    #[error("invalid build config: {0}")]
    Config(String),
    #[error(transparent)]
    File(#[from] FileError),
}

/// Fraction of each combination assigned to training, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitFraction(Ratio<u64>);

impl SplitFraction {
    pub fn new(numer: u64, denom: u64) -> Result<Self, DatasetError> {
        if denom == 0 || numer == 0 || numer >= denom {
            return Err(DatasetError::Config(format!(
                "split fraction must lie strictly between 0 and 1, got {numer}/{denom}"
            )));
        }
        Ok(Self(Ratio::new(numer, denom)))
    }

    /// `floor(fraction × n)`.
    pub fn train_count(self, n: usize) -> usize {
        (n as u64 * self.0.numer() / self.0.denom()) as usize
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl Default for SplitFraction {
    fn default() -> Self {
        Self(Ratio::new(4, 5))
    }
}

impl fmt::Display for SplitFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for SplitFraction {
    type Err = DatasetError;

    /// Accepts `"4/5"` or a decimal such as `"0.8"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DatasetError::Config(format!("cannot parse split fraction {s:?}"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let denom = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        Self::new(int * denom + frac, denom)
    }
}

impl Serialize for SplitFraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SplitFraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Unassigned,
}

impl FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(DatasetError::Config(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Unassigned => "unassigned",
        })
    }
}

/// Profiled counters kept with a sample so its label can be re-derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub op_counts: PerOp<f64>,
    pub bytes_read: f64,
    pub bytes_written: f64,
    pub exec_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub program_id: String,
    pub language: Language,
    pub kernel_name: String,
    pub grid: Dim3,
    pub block: Dim3,
    pub launch_args: String,
    pub source_text: String,
    pub token_count: usize,
    pub label: Boundedness,
    pub split: Split,
    pub metrics: ProfileMetrics,
}

impl DatasetSample {
    pub fn from_program(program: &LabeledProgram, source_text: String, token_count: usize) -> Self {
        let p = &program.profile;
        Self {
            program_id: p.program_id.clone(),
            language: p.language,
            kernel_name: p.kernel_name.clone(),
            grid: p.grid,
            block: p.block,
            launch_args: p.launch_args.clone(),
            source_text,
            token_count,
            label: program.roofline.label,
            split: Split::Unassigned,
            metrics: ProfileMetrics {
                op_counts: p.op_counts,
                bytes_read: p.bytes_read,
                bytes_written: p.bytes_written,
                exec_time_s: p.exec_time_s,
            },
        }
    }

    pub fn profile(&self) -> KernelProfile<f64> {
        KernelProfile {
            program_id: self.program_id.clone(),
            kernel_name: self.kernel_name.clone(),
            language: self.language,
            op_counts: self.metrics.op_counts,
            bytes_read: self.metrics.bytes_read,
            bytes_written: self.metrics.bytes_written,
            exec_time_s: self.metrics.exec_time_s,
            grid: self.grid,
            block: self.block,
            launch_args: self.launch_args.clone(),
        }
    }

    pub fn combination(&self) -> (Language, Boundedness) {
        (self.language, self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub token_cutoff: usize,
    pub seed: u64,
    pub split_fraction: SplitFraction,
    pub tokenizer_id: String,
    pub extensions: Vec<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            token_cutoff: 8000,
            seed: 0,
            split_fraction: SplitFraction::default(),
            tokenizer_id: "gpt-4o-mini".into(),
            extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.token_cutoff == 0 {
            return Err(DatasetError::Config("token cutoff must be positive".into()));
        }
        if self.extensions.is_empty() {
            return Err(DatasetError::Config("extension allowlist is empty".into()));
        }
        Ok(())
    }
}

fn has_allowed_extension(path: &Path, allowlist: &[String]) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|ext| {
        allowlist
            .iter()
            .any(|a| a.trim_start_matches('.').eq_ignore_ascii_case(ext))
    })
}

/// Concatenates every allowed file under `program_dir` (recursively, ordered by
/// relative path), each preceded by a `// File: <relative path>` line.
pub fn scrape_sources(program_dir: &Path, allowlist: &[String]) -> Result<String, DatasetError> {
    if !program_dir.is_dir() {
        return Err(DatasetError::MissingSources(program_dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(program_dir).follow_links(true) {
        let entry = entry.map_err(|e| DatasetError::Io {
            path: program_dir.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && has_allowed_extension(entry.path(), allowlist) {
            let rel = entry
                .path()
                .strip_prefix(program_dir)
                .expect("walkdir yields children of its root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            files.push((rel, entry.into_path()));
        }
    }
    if files.is_empty() {
        return Err(DatasetError::EmptyProgram(program_dir.to_path_buf()));
    }
    files.sort();
    let mut out = String::new();
    for (rel, path) in files {
        let bytes = std::fs::read(&path).map_err(|source| DatasetError::Io { path, source })?;
        out.push_str("// File: ");
        out.push_str(&rel);
        out.push('\n');
        out.push_str(&String::from_utf8_lossy(&bytes));
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn count_tokens(text: &str, tokenizer: &dyn TokenCounter) -> usize {
    tokenizer.count(text)
}

/// Keeps samples with `token_count <= cutoff`.
pub fn prune_by_tokens(samples: Vec<DatasetSample>, cutoff: usize) -> Vec<DatasetSample> {
    let before = samples.len();
    let kept: Vec<_> = samples.into_iter().filter(|s| s.token_count <= cutoff).collect();
    if kept.is_empty() && before > 0 {
        warn!(cutoff, before, "every sample exceeds the token cutoff");
    }
    kept
}

fn group(samples: Vec<DatasetSample>) -> BTreeMap<(Language, Boundedness), Vec<DatasetSample>> {
    let mut groups: BTreeMap<_, Vec<DatasetSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.combination()).or_default().push(s);
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| a.program_id.cmp(&b.program_id));
    }
    groups
}

fn sort_canonical(samples: &mut [DatasetSample]) {
    samples.sort_by(|a, b| (a.language, a.label, &a.program_id).cmp(&(b.language, b.label, &b.program_id)));
}

/// Down-samples every (language, class) combination to the size of the smallest one.
/// Output is ordered by (language, class, program id).
pub fn balance(samples: Vec<DatasetSample>, seed: u64) -> Result<Vec<DatasetSample>, DatasetError> {
    let mut groups = group(samples);
    for language in Language::ALL {
        for label in Boundedness::ALL {
            if groups.get(&(language, label)).is_none_or(|g| g.is_empty()) {
                return Err(DatasetError::EmptyCombination { language, label });
            }
        }
    }
    let target = groups.values().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target * groups.len());
    for members in groups.values_mut() {
        let mut picked = index::sample(&mut rng, members.len(), target).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| members[i].clone()));
    }
    sort_canonical(&mut out);
    Ok(out)
}

/// Assigns `floor(fraction × n)` samples of each combination to training and the
/// rest to validation, after a seeded shuffle within the combination.
pub fn split(samples: Vec<DatasetSample>, fraction: SplitFraction, seed: u64) -> Vec<DatasetSample> {
    let groups = group(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut out = Vec::new();
    for mut members in groups.into_values() {
        let train = fraction.train_count(members.len());
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.shuffle(&mut rng);
        for (rank, &i) in order.iter().enumerate() {
            members[i].split = if rank < train { Split::Train } else { Split::Validation };
        }
        out.extend(members);
    }
    sort_canonical(&mut out);
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub labeled: usize,
    pub built: usize,
    pub missing_sources: usize,
    pub after_pruning: usize,
    pub balanced: usize,
    pub train: usize,
    pub validation: usize,
    /// `LANG/Class` → count after balancing.
    pub per_combination: BTreeMap<String, usize>,
}

impl fmt::Display for StageCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "labeled programs:   {}", self.labeled)?;
        writeln!(
            f,
            "built samples:      {} ({} without sources)",
            self.built, self.missing_sources
        )?;
        writeln!(f, "after token pruning: {}", self.after_pruning)?;
        writeln!(f, "after balancing:    {}", self.balanced)?;
        for (combo, n) in &self.per_combination {
            writeln!(f, "  {combo}: {n}")?;
        }
        write!(
            f,
            "split:              {} train / {} validation",
            self.train, self.validation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub seed: u64,
    pub token_cutoff: usize,
    pub split_fraction: SplitFraction,
    pub tokenizer_id: String,
    pub tokenizer_exact: bool,
    pub extensions: Vec<String>,
    pub hardware: HardwareSpec<f64>,
    pub counts: StageCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub metadata: DatasetMetadata,
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    pub fn save(&self, path: &Path) -> Result<(), FileError> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let text = crate::io::read_text(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, FileError> {
        let ds: Self = crate::io::parse_versioned(path, text, DATASET_SCHEMA_VERSION)?;
        ds.metadata
            .hardware
            .validate()
            .map_err(|e| FileError::invalid(path, e.to_string()))?;
        Ok(ds)
    }

    pub fn by_split(&self, split: Split) -> impl Iterator<Item = &DatasetSample> {
        self.samples.iter().filter(move |s| s.split == split)
    }
}

pub struct BuildOutcome {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Runs the whole pipeline. Sources of program `p` are read from `sources_root/p`;
/// programs without sources are skipped with a warning.
pub fn build_dataset(
    programs: &[LabeledProgram],
    sources_root: &Path,
    hardware: &HardwareSpec<f64>,
    config: &BuildConfig,
    tokenizer: &dyn TokenCounter,
) -> Result<BuildOutcome, DatasetError> {
    config.validate()?;
    let mut warnings = Vec::new();
    let mut counts = StageCounts {
        labeled: programs.len(),
        ..Default::default()
    };

    let scraped: Vec<_> = programs
        .par_iter()
        .map(|p| {
            scrape_sources(&sources_root.join(p.program_id()), &config.extensions).map(|text| {
                let tokens = count_tokens(&text, tokenizer);
                DatasetSample::from_program(p, text, tokens)
            })
        })
        .collect();
    let mut samples = Vec::new();
    for (program, result) in programs.iter().zip(scraped) {
        match result {
            Ok(s) => samples.push(s),
            Err(e @ (DatasetError::MissingSources(_) | DatasetError::EmptyProgram(_))) => {
                let msg = format!("skipping {}: {e}", program.program_id());
                warn!("{msg}");
                warnings.push(msg);
                counts.missing_sources += 1;
            }
            Err(e) => return Err(e),
        }
    }
    counts.built = samples.len();

    let samples = prune_by_tokens(samples, config.token_cutoff);
    counts.after_pruning = samples.len();
    if counts.after_pruning * 10 < counts.built {
        let msg = format!(
            "token cutoff {} kept only {} of {} samples",
            config.token_cutoff, counts.after_pruning, counts.built
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let samples = balance(samples, config.seed)?;
    counts.balanced = samples.len();
    for s in &samples {
        *counts
            .per_combination
            .entry(format!("{}/{}", s.language, s.label))
            .or_insert(0) += 1;
    }
    let samples = split(samples, config.split_fraction, config.seed);
    counts.train = samples.iter().filter(|s| s.split == Split::Train).count();
    counts.validation = samples.iter().filter(|s| s.split == Split::Validation).count();

    Ok(BuildOutcome {
        dataset: Dataset {
            schema_version: DATASET_SCHEMA_VERSION,
            metadata: DatasetMetadata {
                seed: config.seed,
                token_cutoff: config.token_cutoff,
                split_fraction: config.split_fraction,
                tokenizer_id: tokenizer.id().to_string(),
                tokenizer_exact: tokenizer.is_exact(),
                extensions: config.extensions.clone(),
                hardware: hardware.clone(),
                counts,
            },
            samples,
        },
        warnings,
    })
}
