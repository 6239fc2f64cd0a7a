use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use roofline_core::dataset::{Dataset, DatasetSample, DEFAULT_EXTENSIONS};
use roofline_core::io::read_text;
use roofline_core::prompt::{
    build_few_shot_prompt, build_zero_shot_prompt, ExampleBank, PromptBundle, RandomRooflineTask,
};
use roofline_core::roofline::{Boundedness, Language};
use roofline_llm::{estimated_cost, LlmClient, ProviderConfig, ResponseCache};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::rq1::{PROMPTS_FILE, TASKS_FILE};
use super::snapshot;
use crate::error::CliError;
use crate::manifest::{sidecar_for, RunManifest};
use crate::responses::{response_file_name, write_lines, ResponseLine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// Random-roofline prompts from `gen-rq1`.
    Rq1,
    /// Source-code prompts with pseudo-code examples.
    Zero,
    /// Source-code prompts with two real examples.
    Few,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFilter {
    All,
    Train,
    Validation,
}

#[derive(Debug, Args, Serialize)]
pub struct QueryArgs {
    /// Directory written by `gen-rq1` (rq1 mode).
    #[arg(long, conflicts_with = "dataset")]
    pub prompts: Option<PathBuf>,
    /// Dataset written by `build-dataset` (zero and few modes).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: QueryMode,
    /// Model id; overrides the provider config.
    #[arg(long)]
    pub model: Option<String>,
    /// Provider settings TOML.
    #[arg(long)]
    pub provider_config: Option<PathBuf>,
    /// Example bank directory (few mode).
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    /// Serve responses from the cache only; never touch the network.
    #[arg(long)]
    pub replay: bool,
    /// Dataset split to query.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitFilter,
    /// Directory receiving the response file.
    #[arg(long)]
    pub out: PathBuf,
}

struct Job {
    bundle: PromptBundle,
    truth: Boundedness,
    language: Option<Language>,
}

fn read_jsonl<T: DeserializeOwned>(path: &std::path::Path) -> Result<Vec<T>, CliError> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::validation(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn rq1_jobs(dir: &std::path::Path) -> Result<Vec<Job>, CliError> {
    let tasks: Vec<RandomRooflineTask> = read_jsonl(&dir.join(TASKS_FILE))?;
    let truth: HashMap<String, Boundedness> = tasks.into_iter().map(|t| (t.id, t.ground_truth)).collect();
    let bundles: Vec<PromptBundle> = read_jsonl(&dir.join(PROMPTS_FILE))?;
    bundles
        .into_iter()
        .map(|bundle| {
            bundle.validate()?;
            let t = *truth.get(&bundle.target_id).ok_or_else(|| {
                CliError::validation(format!(
                    "prompt {} targets unknown task {}",
                    bundle.id, bundle.target_id
                ))
            })?;
            Ok(Job {
                bundle,
                truth: t,
                language: None,
            })
        })
        .collect()
}

fn source_jobs(args: &QueryArgs, dataset: &Dataset) -> Result<Vec<Job>, CliError> {
    let samples: Vec<&DatasetSample> = dataset
        .samples
        .iter()
        .filter(|s| match args.split {
            SplitFilter::All => true,
            SplitFilter::Train => s.split == roofline_core::dataset::Split::Train,
            SplitFilter::Validation => s.split == roofline_core::dataset::Split::Validation,
        })
        .collect();
    let spec = &dataset.metadata.hardware;
    let bank = match args.mode {
        QueryMode::Few => {
            let dir = args
                .examples
                .as_ref()
                .ok_or_else(|| CliError::validation("few mode needs --examples <dir>"))?;
            let extensions = if dataset.metadata.extensions.is_empty() {
                DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect()
            } else {
                dataset.metadata.extensions.clone()
            };
            let bank = ExampleBank::load(dir, &extensions)?;
            bank.ensure_disjoint(dataset.samples.iter())?;
            Some(bank)
        }
        _ => None,
    };
    samples
        .into_iter()
        .map(|s| {
            let bundle = match &bank {
                Some(bank) => build_few_shot_prompt(s, spec, bank)?,
                None => build_zero_shot_prompt(s, spec)?,
            };
            Ok(Job {
                bundle,
                truth: s.label,
                language: Some(s.language),
            })
        })
        .collect()
}

fn provider_config(args: &QueryArgs) -> Result<ProviderConfig, CliError> {
    let mut config = match (&args.provider_config, &args.model) {
        (Some(path), _) => ProviderConfig::load(path)?,
        (None, Some(model)) => {
            let mut c = ProviderConfig::new(model);
            c.apply_env();
            c
        }
        (None, None) => return Err(CliError::validation("pass --model or --provider-config")),
    };
    if let Some(m) = &args.model {
        config.model_id = m.clone();
    }
    if let Some(t) = args.temperature {
        config.temperature = t;
    }
    if let Some(p) = args.top_p {
        config.top_p = p;
    }
    if let Some(c) = args.concurrency {
        config.concurrency_limit = c;
    }
    config.validate()?;
    Ok(config)
}

pub fn query(args: QueryArgs) -> Result<(), CliError> {
    let config = provider_config(&args)?;
    if args.replay && args.cache.is_none() {
        return Err(CliError::validation("--replay needs --cache <dir>"));
    }
    let (jobs, family) = match args.mode {
        QueryMode::Rq1 => {
            let dir = args
                .prompts
                .as_ref()
                .ok_or_else(|| CliError::validation("rq1 mode needs --prompts <dir>"))?;
            (rq1_jobs(dir)?, "rq1")
        }
        QueryMode::Zero | QueryMode::Few => {
            let path = args
                .dataset
                .as_ref()
                .ok_or_else(|| CliError::validation("zero and few modes need --dataset <file>"))?;
            let dataset = Dataset::load(path)?;
            let family = if args.mode == QueryMode::Few {
                "few_shot"
            } else {
                "zero_shot"
            };
            (source_jobs(&args, &dataset)?, family)
        }
    };
    if jobs.is_empty() {
        return Err(CliError::validation("nothing to query"));
    }
    if !args.replay && config.api_key.is_none() {
        eprintln!(
            "warning: {} is not set; requests go out without credentials",
            config.api_key_env
        );
    }

    let mut client = LlmClient::http(config.clone()).replay(args.replay);
    if let Some(dir) = &args.cache {
        client = client.with_cache(ResponseCache::new(dir));
    }
    let bundles: Vec<PromptBundle> = jobs.iter().map(|j| j.bundle.clone()).collect();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io(e.to_string()))?;
    let records = runtime.block_on(client.send_batch(&bundles));

    let lines: Vec<ResponseLine> = records
        .into_iter()
        .zip(&jobs)
        .map(|(record, job)| ResponseLine {
            record,
            truth: job.truth,
            language: job.language,
        })
        .collect();
    let out = args.out.join(response_file_name(&config, family));
    write_lines(&out, &lines)?;

    let mut errors: BTreeMap<String, usize> = BTreeMap::new();
    for l in lines.iter().filter(|l| !l.record.is_ok()) {
        let kind = l
            .record
            .error
            .as_ref()
            .map_or("empty".to_string(), |e| format!("{:?}", e.kind));
        *errors.entry(kind).or_default() += 1;
    }
    let failed: usize = errors.values().sum();
    println!(
        "{} responses written to {}: {} ok, {} failed {:?}; {} network calls",
        lines.len(),
        out.display(),
        lines.len() - failed,
        failed,
        errors,
        client.network_calls()
    );
    let records: Vec<_> = lines.iter().map(|l| l.record.clone()).collect();
    if let Some(cost) = estimated_cost(&records, &config) {
        println!("estimated cost: ${cost:.4}");
    }

    let mut manifest = RunManifest::new("query", snapshot(&args)?);
    manifest.config["provider"] = snapshot(&config)?;
    for input in [&args.prompts, &args.dataset, &args.provider_config, &args.examples]
        .into_iter()
        .flatten()
    {
        manifest.input(input)?;
    }
    manifest.output(&out).write(&sidecar_for(&out))
}
