use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::Args;
use roofline_core::dataset::Dataset;
use roofline_core::eval::{
    chi_squared_sweep, emit_report, render_roofline_plot_data, summarize, EvalReport, ReportFormat, ScoredRecord,
    SortKey,
};
use roofline_core::io::write_text;
use roofline_core::prompt::{parse_classification_response, parse_rq1_response, PromptMode};
use roofline_core::roofline::label_kernel;
use serde::Serialize;

use super::snapshot;
use crate::error::CliError;
use crate::manifest::{sidecar_for, RunManifest};
use crate::responses::{read_dir_lines, ResponseLine};

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Directory of response files written by `query`.
    #[arg(long)]
    pub responses: PathBuf,
    /// Dataset used to cross-check labels and to produce plot data.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Report file.
    #[arg(long)]
    pub out: PathBuf,
    /// `json` or `text`.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Column the models are ranked by: rq1, rq1_cot, zero_shot, few_shot or model.
    #[arg(long, default_value = "rq1")]
    pub sort_by: String,
    /// Roofline plot-data CSV (needs --dataset).
    #[arg(long, requires = "dataset")]
    pub plot_data: Option<PathBuf>,
    /// Directory of response files from a sampling-parameter sweep.
    #[arg(long)]
    pub chi_squared: Option<PathBuf>,
}

fn score(line: &ResponseLine) -> Option<ScoredRecord> {
    let text = line.record.response_text.as_deref().filter(|_| line.record.is_ok())?;
    let parsed = if line.record.mode.is_rq1() {
        parse_rq1_response(text)
    } else {
        parse_classification_response(text)
    };
    Some(ScoredRecord {
        model: line.record.model_id.clone(),
        mode: line.record.mode,
        shots: line.record.shots,
        target_id: line.record.target_id.clone(),
        language: line.language,
        truth: line.truth,
        prediction: parsed.prediction,
    })
}

/// (model, prompt family, shots, target, sampling config)
type AnswerKey = (String, PromptMode, u32, String, String);

/// Scored answers, one per (model, prompt family, shots, target, sampling config); later files win.
fn scored_records(
    lines: &[ResponseLine],
    dataset: Option<&Dataset>,
) -> Result<(Vec<(String, ScoredRecord)>, usize), CliError> {
    let labels: HashMap<&str, &roofline_core::dataset::DatasetSample> = dataset
        .map(|d| d.samples.iter().map(|s| (s.program_id.as_str(), s)).collect())
        .unwrap_or_default();
    let mut unique: BTreeMap<AnswerKey, (usize, String, ScoredRecord)> = BTreeMap::new();
    let mut unanswered = 0;
    for (i, line) in lines.iter().enumerate() {
        let Some(mut rec) = score(line) else {
            unanswered += 1;
            continue;
        };
        if !rec.mode.is_rq1() && dataset.is_some() {
            let sample = labels.get(rec.target_id.as_str()).ok_or_else(|| {
                CliError::validation(format!("response for {} has no matching dataset sample", rec.target_id))
            })?;
            if sample.label != rec.truth {
                return Err(CliError::validation(format!(
                    "response for {} expects {} but the dataset says {}",
                    rec.target_id, rec.truth, sample.label
                )));
            }
            rec.language = Some(sample.language);
        }
        let config = line.config_label();
        let key = (
            rec.model.clone(),
            rec.mode,
            rec.shots,
            rec.target_id.clone(),
            config.clone(),
        );
        unique.insert(key, (i, config, rec));
    }
    let mut out: Vec<_> = unique.into_values().collect();
    out.sort_by_key(|(i, _, _)| *i);
    Ok((out.into_iter().map(|(_, c, r)| (c, r)).collect(), unanswered))
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let format: ReportFormat = args.format.parse()?;
    let sort_by: SortKey = args.sort_by.parse()?;
    let dataset = args.dataset.as_ref().map(|p| Dataset::load(p)).transpose()?;

    let lines = read_dir_lines(&args.responses)?;
    let (scored, unanswered) = scored_records(&lines, dataset.as_ref())?;
    if scored.is_empty() {
        return Err(CliError::validation(format!(
            "no answered responses under {}",
            args.responses.display()
        )));
    }
    if unanswered > 0 {
        eprintln!("warning: {unanswered} failed queries were left out of scoring");
    }
    let records: Vec<ScoredRecord> = scored.into_iter().map(|(_, r)| r).collect();
    let mut report = EvalReport::new(summarize(&records)?, sort_by);

    let mut manifest = RunManifest::new("evaluate", snapshot(&args)?);
    manifest.input(&args.responses)?;

    if let Some(dir) = &args.chi_squared {
        let sweep_lines = read_dir_lines(dir)?;
        let (sweep, _) = scored_records(&sweep_lines, dataset.as_ref())?;
        let mut groups: BTreeMap<(String, PromptMode, u32), BTreeMap<String, Vec<ScoredRecord>>> = BTreeMap::new();
        for (config, r) in sweep {
            groups
                .entry((r.model.clone(), r.mode, r.shots))
                .or_default()
                .entry(config)
                .or_default()
                .push(r);
        }
        for ((model, mode, _), configs) in groups {
            if configs.len() < 2 {
                continue;
            }
            let configs: Vec<(String, Vec<ScoredRecord>)> = configs.into_iter().collect();
            report.chi_squared.push(chi_squared_sweep(&model, mode, &configs));
        }
        if report.chi_squared.is_empty() {
            eprintln!(
                "warning: no model in {} was run with two or more sampling configurations",
                dir.display()
            );
        }
        manifest.input(dir)?;
    }

    write_text(&args.out, &emit_report(&report, format)?)?;
    print!("{}", emit_report(&report, ReportFormat::Text)?);
    manifest.output(&args.out);

    if let (Some(plot), Some(dataset)) = (&args.plot_data, &dataset) {
        let spec = &dataset.metadata.hardware;
        let labels = dataset
            .samples
            .iter()
            .map(|s| {
                label_kernel(&s.profile(), spec)
                    .map(|l| (s.program_id.as_str(), l))
                    .map_err(|e| CliError::validation(format!("{}: {e}", s.program_id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let text = render_roofline_plot_data(labels.iter().map(|(id, l)| (*id, l)), spec)?;
        write_text(plot, &text)?;
        manifest.output(plot);
    }
    if let Some(d) = &args.dataset {
        manifest.input(d)?;
    }
    manifest.write(&sidecar_for(&args.out))
}
