use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::chi2::{chi_squared_independence, ChiSquared};
use super::metrics::{breakdown, MetricReport, ScoredRecord};
use super::EvalError;
use crate::io::to_canonical_json;
use crate::prompt::{Prediction, PromptMode};
use crate::roofline::Language;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Every metric one model produced, keyed by prompt family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelResults {
    pub model: String,
    /// Roofline questions without thoughts, by shot count.
    pub rq1_plain: BTreeMap<u32, MetricReport>,
    /// Roofline questions with thoughts, by shot count.
    pub rq1_cot: BTreeMap<u32, MetricReport>,
    pub zero_shot: Option<MetricReport>,
    pub few_shot: Option<MetricReport>,
}

fn best(by_shots: &BTreeMap<u32, MetricReport>) -> Option<f64> {
    by_shots.values().map(|r| r.overall.accuracy).reduce(f64::max)
}

impl ModelResults {
    pub fn best_rq1_accuracy(&self) -> Option<f64> {
        best(&self.rq1_plain)
    }

    pub fn best_rq1_cot_accuracy(&self) -> Option<f64> {
        best(&self.rq1_cot)
    }

    pub fn invalid_count(&self) -> u64 {
        self.rq1_plain
            .values()
            .chain(self.rq1_cot.values())
            .chain(self.zero_shot.iter())
            .chain(self.few_shot.iter())
            .map(|r| r.overall.invalid_count)
            .sum()
    }
}

/// Groups records by model and prompt family and scores each group.
pub fn summarize(records: &[ScoredRecord]) -> Result<Vec<ModelResults>, EvalError> {
    let mut groups: BTreeMap<&str, BTreeMap<(PromptMode, u32), Vec<&ScoredRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry(&r.model)
            .or_default()
            .entry((r.mode, r.shots))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|(model, by_mode)| {
            let mut out = ModelResults {
                model: model.to_string(),
                ..Default::default()
            };
            for ((mode, shots), group) in by_mode {
                let report = breakdown(group.iter().copied())?;
                match mode {
                    PromptMode::Rq1Plain => {
                        out.rq1_plain.insert(shots, report);
                    }
                    PromptMode::Rq1Cot => {
                        out.rq1_cot.insert(shots, report);
                    }
                    PromptMode::ZeroShot => out.zero_shot = Some(report),
                    PromptMode::FewShot => out.few_shot = Some(report),
                }
            }
            Ok(out)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    #[default]
    Rq1,
    Rq1Cot,
    ZeroShot,
    FewShot,
    Model,
}

impl SortKey {
    fn value(self, m: &ModelResults) -> Option<f64> {
        match self {
            SortKey::Rq1 => m.best_rq1_accuracy(),
            SortKey::Rq1Cot => m.best_rq1_cot_accuracy(),
            SortKey::ZeroShot => m.zero_shot.as_ref().map(|r| r.overall.accuracy),
            SortKey::FewShot => m.few_shot.as_ref().map(|r| r.overall.accuracy),
            SortKey::Model => None,
        }
    }

    /// Stable sort: descending by the metric with missing values last, or by model name.
    pub fn sort(self, models: &mut [ModelResults]) {
        if self == SortKey::Model {
            models.sort_by(|a, b| a.model.cmp(&b.model));
            return;
        }
        models.sort_by(|a, b| match (self.value(a), self.value(b)) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
    }
}

impl FromStr for SortKey {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rq1" => Ok(SortKey::Rq1),
            "rq1_cot" => Ok(SortKey::Rq1Cot),
            "zero_shot" => Ok(SortKey::ZeroShot),
            "few_shot" => Ok(SortKey::FewShot),
            "model" => Ok(SortKey::Model),
            other => Err(EvalError::Usage(format!("unknown sort key {other:?}"))),
        }
    }
}

/// Hyperparameter sensitivity: rows are sampling configurations, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredBlock {
    pub model: String,
    pub mode: PromptMode,
    pub configs: Vec<String>,
    pub columns: Vec<String>,
    pub table: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ChiSquared>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Builds the prediction-count table for one model across configurations and tests it.
/// The `Invalid` column is dropped when no configuration produced an invalid answer.
pub fn chi_squared_sweep(model: &str, mode: PromptMode, configs: &[(String, Vec<ScoredRecord>)]) -> ChiSquaredBlock {
    let classes = [Prediction::Compute, Prediction::Bandwidth, Prediction::Invalid];
    let mut table: Vec<Vec<u64>> = configs
        .iter()
        .map(|(_, records)| {
            classes
                .iter()
                .map(|c| records.iter().filter(|r| r.prediction == *c).count() as u64)
                .collect()
        })
        .collect();
    let mut columns: Vec<String> = classes.iter().map(|c| c.as_str().to_string()).collect();
    if table.iter().all(|row| row[2] == 0) {
        table.iter_mut().for_each(|row| {
            row.pop();
        });
        columns.pop();
    }
    let (result, error) = match chi_squared_independence(&table) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ChiSquaredBlock {
        model: model.to_string(),
        mode,
        configs: configs.iter().map(|(name, _)| name.clone()).collect(),
        columns,
        table,
        result,
        error,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub sort_by: SortKey,
    pub models: Vec<ModelResults>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chi_squared: Vec<ChiSquaredBlock>,
}

impl EvalReport {
    pub fn new(mut models: Vec<ModelResults>, sort_by: SortKey) -> Self {
        sort_by.sort(&mut models);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            sort_by,
            models,
            chi_squared: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(EvalError::Usage(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn emit_report(report: &EvalReport, format: ReportFormat) -> Result<String, EvalError> {
    match format {
        ReportFormat::Json => to_canonical_json(report).map_err(|e| EvalError::Usage(e.to_string())),
        ReportFormat::Text => Ok(render_text(report)),
    }
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "--".to_string(), |v| format!("{v:.2}"))
}

fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let _ = writeln!(out, "{title}");
    out.push_str(&line(header.to_vec()));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out.push('\n');
}

fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let acc = |r: &Option<MetricReport>| r.as_ref().map(|r| r.overall.accuracy);
    let f1 = |r: &Option<MetricReport>| r.as_ref().map(|r| r.overall.macro_f1);
    let mcc = |r: &Option<MetricReport>| r.as_ref().map(|r| r.overall.mcc);

    let summary: Vec<Vec<String>> = report
        .models
        .iter()
        .map(|m| {
            vec![
                m.model.clone(),
                cell(m.best_rq1_accuracy()),
                cell(m.best_rq1_cot_accuracy()),
                cell(acc(&m.zero_shot)),
                cell(f1(&m.zero_shot)),
                cell(mcc(&m.zero_shot)),
                cell(acc(&m.few_shot)),
                cell(f1(&m.few_shot)),
                cell(mcc(&m.few_shot)),
                m.invalid_count().to_string(),
            ]
        })
        .collect();
    table(
        &mut out,
        "Summary",
        &[
            "Model",
            "Roofline Acc",
            "Roofline CoT Acc",
            "Zero-shot Acc",
            "Zero-shot F1",
            "Zero-shot MCC",
            "Few-shot Acc",
            "Few-shot F1",
            "Few-shot MCC",
            "Invalid",
        ],
        &summary,
    );

    let shots = [2u32, 4, 8];
    let by_shots: Vec<Vec<String>> = report
        .models
        .iter()
        .map(|m| {
            let mut row = vec![m.model.clone()];
            for map in [&m.rq1_plain, &m.rq1_cot] {
                row.extend(shots.iter().map(|s| cell(map.get(s).map(|r| r.overall.accuracy))));
            }
            row
        })
        .collect();
    table(
        &mut out,
        "Roofline accuracy by shot count",
        &[
            "Model",
            "2-shot",
            "4-shot",
            "8-shot",
            "CoT 2-shot",
            "CoT 4-shot",
            "CoT 8-shot",
        ],
        &by_shots,
    );

    let lang = |r: &Option<MetricReport>, l: Language| r.as_ref().and_then(|r| r.language(l)).map(|s| s.accuracy);
    let per_language: Vec<Vec<String>> = report
        .models
        .iter()
        .map(|m| {
            vec![
                m.model.clone(),
                cell(lang(&m.zero_shot, Language::Cuda)),
                cell(lang(&m.zero_shot, Language::Omp)),
                cell(lang(&m.few_shot, Language::Cuda)),
                cell(lang(&m.few_shot, Language::Omp)),
            ]
        })
        .collect();
    table(
        &mut out,
        "Source-code accuracy by language",
        &[
            "Model",
            "Zero-shot CUDA",
            "Zero-shot OMP",
            "Few-shot CUDA",
            "Few-shot OMP",
        ],
        &per_language,
    );

    if !report.chi_squared.is_empty() {
        let _ = writeln!(out, "Hyperparameter sensitivity (chi-squared)");
        for block in &report.chi_squared {
            let _ = match (&block.result, &block.error) {
                (Some(r), _) => writeln!(
                    out,
                    "{} {} over [{}]: statistic {:.4}, dof {}, p {:.6e}",
                    block.model,
                    block.mode,
                    block.configs.join(", "),
                    r.statistic,
                    r.dof,
                    r.p_value
                ),
                (None, error) => writeln!(
                    out,
                    "{} {} over [{}]: not computed ({})",
                    block.model,
                    block.mode,
                    block.configs.join(", "),
                    error.as_deref().unwrap_or("unknown")
                ),
            };
        }
    }
    out
}
