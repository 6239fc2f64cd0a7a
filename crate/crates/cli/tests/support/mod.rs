//! Helpers shared by the integration tests: running the binary and recording replay caches.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use roofline_core::dataset::Dataset;
use roofline_core::io::read_text;
use roofline_core::prompt::{build_zero_shot_prompt, PromptBundle, RandomRooflineTask};
use roofline_core::roofline::Boundedness;
use roofline_llm::{ProviderConfig, QueryRecord, ResponseCache};

pub const FIXTURE_MODEL: &str = "fixture-model";
/// Timestamp written into recorded cache entries so regenerated fixtures are byte-stable.
const RECORDED_AT: &str = "2026-01-01T00:00:00.000Z";
/// Unroutable endpoint: any request that escapes replay fails instead of reaching a provider.
const DEAD_ENDPOINT: &str = "http://127.0.0.1:9/v1/chat/completions";

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn ok(self) -> Result<Run, String> {
        if self.code == 0 {
            Ok(self)
        } else {
            Err(format!("exit {}: {}", self.code, self.stderr))
        }
    }
}

pub fn roofline<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_roofline"))
        .args(args)
        .env("ROOFLINE_LLM_ENDPOINT", DEAD_ENDPOINT)
        .env_remove("OPENAI_API_KEY")
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn roofline");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

/// ingest, build-dataset and gen-rq1 over the fixture inputs, written into `work`.
pub fn prepare(work: &Path) -> Result<(), String> {
    let fx = fixture_dir();
    roofline(&[
        "ingest",
        "--profiles",
        &p(&fx.join("profiles")),
        "--hardware",
        &p(&fx.join("hardware.toml")),
        "--out",
        &p(&work.join("profiles.json")),
    ])
    .ok()?;
    roofline(&[
        "build-dataset",
        "--profiles",
        &p(&work.join("profiles.json")),
        "--sources",
        &p(&fx.join("sources")),
        "--seed",
        "7",
        "--out",
        &p(&work.join("dataset.json")),
    ])
    .ok()?;
    roofline(&[
        "gen-rq1",
        "--count",
        "5",
        "--shots",
        "2",
        "--both",
        "--seed",
        "3",
        "--out",
        &p(&work.join("rq1")),
    ])
    .ok()?;
    Ok(())
}

/// The sampling configuration of the temperature sweep besides the default one.
pub fn sweep_config() -> ProviderConfig {
    let mut c = ProviderConfig::new(FIXTURE_MODEL);
    c.temperature = 1.0;
    c.top_p = 1.0;
    c
}

pub type Prompts = Vec<(PromptBundle, Boundedness)>;

/// Every prompt the fixture pipeline sends with its ground truth: (zero-shot, rq1).
pub fn fixture_prompts(work: &Path) -> Result<(Prompts, Prompts), String> {
    let dataset = Dataset::load(&work.join("dataset.json")).map_err(|e| e.to_string())?;
    let spec = &dataset.metadata.hardware;
    let zero = dataset
        .samples
        .iter()
        .map(|s| build_zero_shot_prompt(s, spec).map(|b| (b, s.label)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let jsonl = |name: &str| read_text(&work.join("rq1").join(name)).map_err(|e| e.to_string());
    let tasks: Vec<RandomRooflineTask> = jsonl("tasks.jsonl")?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let rq1 = jsonl("prompts.jsonl")?
        .lines()
        .map(|l| {
            let b: PromptBundle = serde_json::from_str(l).map_err(|e| e.to_string())?;
            let truth = tasks
                .iter()
                .find(|t| t.id == b.target_id)
                .ok_or("unknown task")?
                .ground_truth;
            Ok((b, truth))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok((zero, rq1))
}

/// Stores one cached response per prompt; `answer` returning `None` leaves the prompt uncached.
pub fn record(
    cache: &Path,
    config: &ProviderConfig,
    prompts: &[(PromptBundle, Boundedness)],
    answer: impl Fn(usize, &PromptBundle, Boundedness) -> Option<String>,
) -> Result<usize, String> {
    let cache = ResponseCache::new(cache);
    let mut stored = 0;
    for (i, (bundle, truth)) in prompts.iter().enumerate() {
        let Some(text) = answer(i, bundle, *truth) else {
            continue;
        };
        let mut rec = QueryRecord::unsent(bundle, config);
        rec.response_text = Some(text);
        rec.attempts = 1;
        rec.timestamp = RECORDED_AT.to_string();
        cache.store(&rec).map_err(|e| e.to_string())?;
        stored += 1;
    }
    Ok(stored)
}

pub fn rq1_answer(bundle: &PromptBundle, label: Boundedness) -> String {
    if bundle.mode == roofline_core::prompt::PromptMode::Rq1Cot {
        format!("Thought: comparing the arithmetic intensity with the balance point.\nAnswer: {label}")
    } else {
        format!("Answer: {label}")
    }
}

/// The canned answers behind the checked-in fixture cache.
pub fn record_fixture_cache(work: &Path, cache: &Path) -> Result<usize, String> {
    let (zero, rq1) = fixture_prompts(work)?;
    let default = ProviderConfig::new(FIXTURE_MODEL);
    let mut n = record(cache, &default, &zero, |_, b, truth| {
        Some(match b.target_id.as_str() {
            "nbody-cuda" => truth.opposite().to_string(),
            "reduce-omp" => "It depends on the input size.".to_string(),
            _ => format!("{truth}"),
        })
    })?;
    n += record(cache, &default, &rq1, |i, b, truth| {
        Some(rq1_answer(b, if i % 4 == 3 { truth.opposite() } else { truth }))
    })?;
    n += record(cache, &sweep_config(), &zero, |_, b, truth| {
        Some(match b.target_id.as_str() {
            "copy-cuda" | "matmul-omp" | "stencil-omp" => format!("{}-bound", truth.opposite()),
            _ => format!("{truth}"),
        })
    })?;
    Ok(n)
}

/// Output of a replayed query + evaluate run.
pub struct Replayed {
    pub report_json: String,
    pub plot_csv: String,
    pub query_stdout: Vec<String>,
}

/// Replays every fixture query from `cache` and evaluates the responses.
pub fn replay_and_evaluate(work: &Path, cache: &Path) -> Result<Replayed, String> {
    let dataset = p(&work.join("dataset.json"));
    let responses = p(&work.join("responses"));
    let sweep = p(&work.join("sweep"));
    let prompts = p(&work.join("rq1"));
    let cache = p(cache);
    let mut query_stdout = Vec::new();
    let base = ["query", "--model", FIXTURE_MODEL, "--cache", &cache, "--replay"];
    let runs: Vec<Vec<&str>> = vec![
        vec!["--mode", "zero", "--dataset", &dataset, "--out", &responses],
        vec!["--mode", "rq1", "--prompts", &prompts, "--out", &responses],
        vec!["--mode", "zero", "--dataset", &dataset, "--out", &sweep],
        vec![
            "--mode",
            "zero",
            "--dataset",
            &dataset,
            "--temperature",
            "1.0",
            "--top-p",
            "1.0",
            "--out",
            &sweep,
        ],
    ];
    for extra in runs {
        let args: Vec<&str> = base.iter().copied().chain(extra).collect();
        query_stdout.push(roofline(&args).ok()?.stdout);
    }
    let report = work.join("report.json");
    let plot = work.join("plot.csv");
    roofline(&[
        "evaluate",
        "--responses",
        &responses,
        "--dataset",
        &dataset,
        "--chi-squared",
        &sweep,
        "--plot-data",
        &p(&plot),
        "--out",
        &p(&report),
    ])
    .ok()?;
    Ok(Replayed {
        report_json: read_text(&report).map_err(|e| e.to_string())?,
        plot_csv: read_text(&plot).map_err(|e| e.to_string())?,
        query_stdout,
    })
}
