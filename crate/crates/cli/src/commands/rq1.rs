use std::path::PathBuf;

use clap::Args;
use roofline_core::io::{to_canonical_json_line, write_text};
use roofline_core::prompt::{build_rq1_prompt, gen_random_rooflines, PromptBundle, PromptMode, RandomRooflineTask};
use serde::Serialize;

use super::snapshot;
use crate::error::CliError;
use crate::manifest::RunManifest;

pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const TASKS_FILE: &str = "tasks.jsonl";

#[derive(Debug, Args, Serialize)]
pub struct GenRq1Args {
    /// Number of random rooflines; each yields one bandwidth-bound and one compute-bound task.
    #[arg(long, default_value_t = 240)]
    pub count: usize,
    /// Worked examples per prompt; repeat or comma-separate for several (2, 4 or 8).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub shots: Vec<u32>,
    /// Include Thought lines in the worked examples (default).
    #[arg(long, overrides_with = "no_cot")]
    pub cot: bool,
    /// Omit Thought lines.
    #[arg(long, overrides_with = "cot")]
    pub no_cot: bool,
    /// Emit both the thought and the plain variant of every prompt.
    #[arg(long, conflicts_with_all = ["cot", "no_cot"])]
    pub both: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String, CliError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&to_canonical_json_line(item).map_err(|e| CliError::io(e.to_string()))?);
    }
    Ok(text)
}

pub fn gen_rq1(args: GenRq1Args) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::validation("--count must be at least 1"));
    }
    let variants: Vec<bool> = match (args.both, args.no_cot) {
        (true, _) => vec![true, false],
        (false, true) => vec![false],
        (false, false) => vec![true],
    };
    for &s in &args.shots {
        PromptMode::Rq1Cot.check_shots(s)?;
    }
    let tasks: Vec<RandomRooflineTask> = gen_random_rooflines(args.count, args.seed)
        .into_iter()
        .flat_map(|(bb, cb)| [bb, cb])
        .collect();
    let mut prompts: Vec<PromptBundle> = Vec::with_capacity(tasks.len() * args.shots.len() * variants.len());
    for &cot in &variants {
        for &shots in &args.shots {
            for t in &tasks {
                prompts.push(build_rq1_prompt(t, shots, cot, args.seed)?);
            }
        }
    }
    write_text(&args.out.join(TASKS_FILE), &jsonl(&tasks)?)?;
    write_text(&args.out.join(PROMPTS_FILE), &jsonl(&prompts)?)?;
    println!(
        "wrote {} tasks and {} prompts to {}",
        tasks.len(),
        prompts.len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new("gen-rq1", snapshot(&args)?);
    manifest
        .seed("seed", args.seed)
        .output(&args.out.join(TASKS_FILE))
        .output(&args.out.join(PROMPTS_FILE));
    manifest.write(&args.out.join("manifest.json"))
}
