//! Profiler metric exports to labeled kernel profiles.
//!
//! The export is a delimiter-separated table in long format, one metric per row:
//!
//! ```text
//! program_id,kernel_name,kernel_order,invocation,language,grid_x,grid_y,grid_z,block_x,block_y,block_z,args,metric,value
//! ```
//!
//! A metric-mapping table ([`IngestConfig`]) tells which profiler metric feeds which
//! role (SP/DP/INT op counts, read/write traffic, time) and in which unit, so exports
//! from any profiler can be adapted without code changes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::io::FileError;
use crate::roofline::{
    label_kernel, Dim3, HardwareSpec, KernelLabel, KernelProfile, Language, OpKind, PerOp, RooflineError,
};

pub const PROFILES_SCHEMA_VERSION: u32 = 1;

pub const REQUIRED_COLUMNS: [&str; 14] = [
    "program_id",
    "kernel_name",
    "kernel_order",
    "invocation",
    "language",
    "grid_x",
    "grid_y",
    "grid_z",
    "block_x",
    "block_y",
    "block_z",
    "args",
    "metric",
    "value",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: missing required column {column:?}")]
    Schema { source_name: String, column: String },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}:{line}: duplicate row for {key}")]
    DuplicateRow {
        source_name: String,
        line: u64,
        key: String,
    },
    #[error("invalid ingest config: {0}")]
    Config(String),
    #[error("kernel {program_id}/{kernel_name} has no metric for role {role}")]
    IncompleteProfile {
        program_id: String,
        kernel_name: String,
        role: MetricRole,
    },
    #[error("kernel {program_id}/{kernel_name}: {source}")]
    Invalid {
        program_id: String,
        kernel_name: String,
        #[source]
        source: RooflineError,
    },
    #[error("program {0} has more than one profile")]
    DuplicateProgram(String),
    #[error(transparent)]
    File(#[from] FileError),
}

impl IngestError {
    pub fn is_io(&self) -> bool {
        match self {
            IngestError::Io { .. } => true,
            IngestError::File(f) => f.is_io(),
            _ => false,
        }
    }
}

/// What a profiler metric measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricRole {
    SpOps,
    DpOps,
    IntOps,
    ReadTraffic,
    WriteTraffic,
    Time,
}

impl MetricRole {
    pub const ALL: [MetricRole; 6] = [
        MetricRole::SpOps,
        MetricRole::DpOps,
        MetricRole::IntOps,
        MetricRole::ReadTraffic,
        MetricRole::WriteTraffic,
        MetricRole::Time,
    ];

    fn ops_kind(self) -> Option<OpKind> {
        match self {
            MetricRole::SpOps => Some(OpKind::Sp),
            MetricRole::DpOps => Some(OpKind::Dp),
            MetricRole::IntOps => Some(OpKind::Int),
            _ => None,
        }
    }
}

impl fmt::Display for MetricRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricRole::SpOps => "sp_ops",
            MetricRole::DpOps => "dp_ops",
            MetricRole::IntOps => "int_ops",
            MetricRole::ReadTraffic => "read_traffic",
            MetricRole::WriteTraffic => "write_traffic",
            MetricRole::Time => "time",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricUnit {
    Count,
    /// Memory transactions, converted with `bytes_per_transaction`.
    Transactions,
    Bytes,
    Seconds,
    Milliseconds,
    Microseconds,
    Nanoseconds,
}

impl MetricUnit {
    fn accepted_by(self, role: MetricRole) -> bool {
        use MetricUnit::*;
        match role {
            MetricRole::SpOps | MetricRole::DpOps | MetricRole::IntOps => self == Count,
            MetricRole::ReadTraffic | MetricRole::WriteTraffic => matches!(self, Transactions | Bytes),
            MetricRole::Time => matches!(self, Seconds | Milliseconds | Microseconds | Nanoseconds),
        }
    }

    fn factor(self, bytes_per_transaction: f64) -> f64 {
        match self {
            MetricUnit::Count | MetricUnit::Bytes | MetricUnit::Seconds => 1.0,
            MetricUnit::Transactions => bytes_per_transaction,
            MetricUnit::Milliseconds => 1e-3,
            MetricUnit::Microseconds => 1e-6,
            MetricUnit::Nanoseconds => 1e-9,
        }
    }
}

/// One profiler metric contributing `weight × value` to a role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricMapping {
    pub name: String,
    pub role: MetricRole,
    pub unit: MetricUnit,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

fn default_bytes_per_transaction() -> f64 {
    32.0
}

fn default_delimiter() -> char {
    ','
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    #[serde(default = "default_bytes_per_transaction")]
    pub bytes_per_transaction: f64,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(rename = "metric")]
    pub metrics: Vec<MetricMapping>,
}

impl Default for IngestConfig {
    /// Canonical metric names with traffic counted in transactions.
    fn default() -> Self {
        let m = |name: &str, role, unit| MetricMapping {
            name: name.to_string(),
            role,
            unit,
            weight: 1.0,
        };
        Self {
            bytes_per_transaction: default_bytes_per_transaction(),
            delimiter: default_delimiter(),
            metrics: vec![
                m("sp_flop", MetricRole::SpOps, MetricUnit::Count),
                m("dp_flop", MetricRole::DpOps, MetricUnit::Count),
                m("int_op", MetricRole::IntOps, MetricUnit::Count),
                m("read_transactions", MetricRole::ReadTraffic, MetricUnit::Transactions),
                m("write_transactions", MetricRole::WriteTraffic, MetricUnit::Transactions),
                m("time_s", MetricRole::Time, MetricUnit::Seconds),
            ],
        }
    }
}

impl IngestConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let config: Self = toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.bytes_per_transaction.is_finite() && self.bytes_per_transaction > 0.0) {
            return Err(IngestError::Config(format!(
                "bytes_per_transaction must be positive, got {}",
                self.bytes_per_transaction
            )));
        }
        if !self.delimiter.is_ascii() {
            return Err(IngestError::Config("delimiter must be a single ASCII character".into()));
        }
        let mut names = HashSet::new();
        for m in &self.metrics {
            if !names.insert(m.name.as_str()) {
                return Err(IngestError::Config(format!("metric {:?} mapped twice", m.name)));
            }
            if !m.unit.accepted_by(m.role) {
                return Err(IngestError::Config(format!(
                    "metric {:?}: unit {:?} is not valid for role {}",
                    m.name, m.unit, m.role
                )));
            }
            if !(m.weight.is_finite() && m.weight > 0.0) {
                return Err(IngestError::Config(format!(
                    "metric {:?}: weight must be positive",
                    m.name
                )));
            }
        }
        for role in MetricRole::ALL {
            if !self.metrics.iter().any(|m| m.role == role) {
                return Err(IngestError::Config(format!("no metric mapped to role {role}")));
            }
        }
        Ok(())
    }

    fn mapping(&self, metric: &str) -> Option<&MetricMapping> {
        self.metrics.iter().find(|m| m.name == metric)
    }
}

/// One metric value of one kernel invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub program_id: String,
    pub kernel_name: String,
    pub kernel_order: u32,
    pub invocation: u32,
    pub language: Language,
    pub grid: Dim3,
    pub block: Dim3,
    pub args: String,
    pub metric: String,
    pub value: f64,
    /// 1-based line in the source file.
    pub line: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedExport {
    pub source_name: String,
    pub rows: Vec<ProfileRow>,
    /// Rows whose metric has no mapping.
    pub ignored_rows: usize,
    pub ignored_metrics: BTreeSet<String>,
}

/// Parses an export file.
pub fn parse_profile_export(path: &Path, config: &IngestConfig) -> Result<ParsedExport, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_profile_reader(file, &path.display().to_string(), config)
}

pub fn parse_profile_reader<R: Read>(
    reader: R,
    source_name: &str,
    config: &IngestConfig,
) -> Result<ParsedExport, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| IngestError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let headers = csv_reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let mut index = BTreeMap::new();
    for column in REQUIRED_COLUMNS {
        let pos = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IngestError::Schema {
                source_name: source_name.to_string(),
                column: column.to_string(),
            })?;
        index.insert(column, pos);
    }

    let mut out = ParsedExport {
        source_name: source_name.to_string(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |name: &str| record.get(index[name]).unwrap_or("");
        let number = |name: &str| -> Result<u32, IngestError> {
            field(name)
                .parse::<u32>()
                .map_err(|e| parse_err(line, format!("column {name}: {:?}: {e}", field(name))))
        };
        let text = |name: &str| -> Result<String, IngestError> {
            let v = field(name);
            if v.is_empty() {
                Err(parse_err(line, format!("column {name} is empty")))
            } else {
                Ok(v.to_string())
            }
        };
        let value_text = field("value");
        let value: f64 = value_text
            .parse()
            .map_err(|e| parse_err(line, format!("column value: {value_text:?}: {e}")))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("column value: {value_text:?} is not finite")));
        }
        let row = ProfileRow {
            program_id: text("program_id")?,
            kernel_name: text("kernel_name")?,
            kernel_order: number("kernel_order")?,
            invocation: number("invocation")?,
            language: field("language")
                .parse()
                .map_err(|e: RooflineError| parse_err(line, e.to_string()))?,
            grid: Dim3::new(number("grid_x")?, number("grid_y")?, number("grid_z")?),
            block: Dim3::new(number("block_x")?, number("block_y")?, number("block_z")?),
            args: field("args").to_string(),
            metric: text("metric")?,
            value,
            line,
        };
        let key = (
            row.program_id.clone(),
            row.kernel_name.clone(),
            row.invocation,
            row.metric.clone(),
        );
        if !seen.insert(key) {
            return Err(IngestError::DuplicateRow {
                source_name: source_name.to_string(),
                line,
                key: format!(
                    "{}/{} invocation {} metric {}",
                    row.program_id, row.kernel_name, row.invocation, row.metric
                ),
            });
        }
        if config.mapping(&row.metric).is_none() {
            out.ignored_rows += 1;
            out.ignored_metrics.insert(row.metric.clone());
        }
        out.rows.push(row);
    }
    if out.ignored_rows > 0 {
        warn!(
            source = source_name,
            rows = out.ignored_rows,
            metrics = ?out.ignored_metrics,
            "ignored unmapped metrics"
        );
    }
    Ok(out)
}

/// Rows of several exports merged by program. When a program appears in more than
/// one export the later export wins. Output is ordered by program id.
pub fn merge_exports(exports: &[ParsedExport]) -> (Vec<ProfileRow>, Vec<String>) {
    let mut by_program: BTreeMap<&str, (usize, Vec<&ProfileRow>)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (file_idx, export) in exports.iter().enumerate() {
        for row in &export.rows {
            let entry = by_program.entry(&row.program_id).or_insert((file_idx, Vec::new()));
            if entry.0 != file_idx {
                let msg = format!(
                    "program {} appears in {} and {}; keeping the later file",
                    row.program_id, exports[entry.0].source_name, export.source_name
                );
                warn!("{msg}");
                warnings.push(msg);
                *entry = (file_idx, Vec::new());
            }
            entry.1.push(row);
        }
    }
    let rows = by_program
        .into_values()
        .flat_map(|(_, rows)| rows.into_iter().cloned())
        .collect();
    (rows, warnings)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FirstKernels {
    pub selected: BTreeMap<String, String>,
    /// Programs without any first-invocation rows.
    pub excluded: Vec<String>,
}

/// Picks, per program, the kernel earliest in the declared kernel ordering among its
/// first-invocation rows. Ties on `kernel_order` fall back to row order.
pub fn select_first_kernel(rows: &[ProfileRow]) -> FirstKernels {
    let mut best: BTreeMap<&str, (u32, usize, &str)> = BTreeMap::new();
    let mut programs = BTreeSet::new();
    for (pos, row) in rows.iter().enumerate() {
        programs.insert(row.program_id.as_str());
        if row.invocation != 0 {
            continue;
        }
        let candidate = (row.kernel_order, pos, row.kernel_name.as_str());
        best.entry(&row.program_id)
            .and_modify(|cur| {
                if (candidate.0, candidate.1) < (cur.0, cur.1) {
                    *cur = candidate;
                }
            })
            .or_insert(candidate);
    }
    let mut out = FirstKernels::default();
    for program in programs {
        match best.get(program) {
            Some(&(_, _, kernel)) => {
                out.selected.insert(program.to_string(), kernel.to_string());
            }
            None => {
                warn!(program, "no first-invocation kernel rows; program excluded");
                out.excluded.push(program.to_string());
            }
        }
    }
    out
}

/// Builds the profile of one kernel from its first-invocation rows.
pub fn to_kernel_profile<'a>(
    rows: impl IntoIterator<Item = &'a ProfileRow>,
    config: &IngestConfig,
) -> Result<KernelProfile<f64>, IngestError> {
    let rows: Vec<&ProfileRow> = rows.into_iter().filter(|r| r.invocation == 0).collect();
    let first = rows
        .first()
        .ok_or_else(|| IngestError::Config("no first-invocation rows".into()))?;
    let mut totals: BTreeMap<MetricRole, f64> = BTreeMap::new();
    for row in &rows {
        if let Some(m) = config.mapping(&row.metric) {
            *totals.entry(m.role).or_insert(0.0) += row.value * m.weight * m.unit.factor(config.bytes_per_transaction);
        }
    }
    let role = |role: MetricRole| {
        totals
            .get(&role)
            .copied()
            .ok_or_else(|| IngestError::IncompleteProfile {
                program_id: first.program_id.clone(),
                kernel_name: first.kernel_name.clone(),
                role,
            })
    };
    let op_counts = PerOp::try_from_fn(|kind| {
        let r = MetricRole::ALL
            .into_iter()
            .find(|r| r.ops_kind() == Some(kind))
            .expect("every kind has a role");
        role(r)
    })?;
    let profile = KernelProfile {
        program_id: first.program_id.clone(),
        kernel_name: first.kernel_name.clone(),
        language: first.language,
        op_counts,
        bytes_read: role(MetricRole::ReadTraffic)?,
        bytes_written: role(MetricRole::WriteTraffic)?,
        exec_time_s: role(MetricRole::Time)?,
        grid: first.grid,
        block: first.block,
        launch_args: first.args.clone(),
    };
    profile.validate().map_err(|source| IngestError::Invalid {
        program_id: profile.program_id.clone(),
        kernel_name: profile.kernel_name.clone(),
        source,
    })?;
    Ok(profile)
}

/// A program's first kernel with its ground-truth label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledProgram {
    pub profile: KernelProfile<f64>,
    pub roofline: KernelLabel<f64>,
}

impl LabeledProgram {
    pub fn program_id(&self) -> &str {
        &self.profile.program_id
    }
}

/// One label per program.
pub fn label_programs(
    profiles: &[KernelProfile<f64>],
    spec: &HardwareSpec<f64>,
) -> Result<BTreeMap<String, LabeledProgram>, IngestError> {
    let mut out = BTreeMap::new();
    for profile in profiles {
        let roofline = label_kernel(profile, spec).map_err(|source| IngestError::Invalid {
            program_id: profile.program_id.clone(),
            kernel_name: profile.kernel_name.clone(),
            source,
        })?;
        for w in &roofline.warnings {
            warn!(program = %profile.program_id, kernel = %profile.kernel_name, "{w}");
        }
        let labeled = LabeledProgram {
            profile: profile.clone(),
            roofline,
        };
        if out.insert(profile.program_id.clone(), labeled).is_some() {
            return Err(IngestError::DuplicateProgram(profile.program_id.clone()));
        }
    }
    Ok(out)
}

/// The canonical labeled-profiles file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilesFile {
    pub schema_version: u32,
    pub hardware: HardwareSpec<f64>,
    pub bytes_per_transaction: f64,
    pub programs: Vec<LabeledProgram>,
}

impl ProfilesFile {
    pub fn load(path: &Path) -> Result<Self, FileError> {
        let file: Self = crate::io::read_versioned(path, PROFILES_SCHEMA_VERSION)?;
        file.hardware
            .validate()
            .map_err(|e| FileError::invalid(path, e.to_string()))?;
        for p in &file.programs {
            p.profile
                .validate()
                .map_err(|e| FileError::invalid(path, format!("{}: {e}", p.profile.program_id)))?;
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), FileError> {
        crate::io::write_json(path, self)
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub profiles: Vec<KernelProfile<f64>>,
    pub ignored_rows: usize,
    pub warnings: Vec<String>,
}

/// Parses every export (concurrently), merges them in the given order, keeps the first
/// kernel of each program and converts it to a profile. Output sorted by program id.
pub fn ingest_exports(paths: &[PathBuf], config: &IngestConfig) -> Result<IngestOutcome, IngestError> {
    config.validate()?;
    let exports = paths
        .par_iter()
        .map(|p| parse_profile_export(p, config))
        .collect::<Result<Vec<_>, _>>()?;
    let (rows, mut warnings) = merge_exports(&exports);
    let first = select_first_kernel(&rows);
    warnings.extend(
        first
            .excluded
            .iter()
            .map(|p| format!("program {p} has no first-invocation kernel rows; excluded")),
    );
    let mut profiles = Vec::with_capacity(first.selected.len());
    for (program, kernel) in &first.selected {
        let kernel_rows = rows
            .iter()
            .filter(|r| &r.program_id == program && &r.kernel_name == kernel);
        profiles.push(to_kernel_profile(kernel_rows, config)?);
    }
    Ok(IngestOutcome {
        profiles,
        ignored_rows: exports.iter().map(|e| e.ignored_rows).sum(),
        warnings,
    })
}
