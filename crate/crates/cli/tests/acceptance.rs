//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Set `ROOFLINE_UPDATE_GOLDEN=1` to rewrite the prompt golden files instead of comparing.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;
mod support;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use roofline_core::dataset::{build_dataset, BuildConfig, DatasetSample, ProfileMetrics, Split, SplitFraction};
use roofline_core::eval::{accuracy, chi_squared_independence, macro_f1, mcc, ConfusionMatrix};
use roofline_core::ingest::LabeledProgram;
use roofline_core::prompt::{
    build_few_shot_prompt, build_zero_shot_prompt, BankExample, ExampleBank, Prediction, PromptBundle,
};
use roofline_core::roofline::{
    aggregate_label, aggregate_label_map, balance_point, classify_op, label_kernel, roofline_ceiling, Boundedness,
    Dim3, HardwareSpec, KernelProfile, Language, OpKind, PerOp,
};
use roofline_core::tokenizer::tokenizer_for;
use roofline_llm::ProviderConfig;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what}: got {got}, want {want} ± {tol}")
    })
}

fn rtx3080() -> HardwareSpec<f64> {
    HardwareSpec::new("NVIDIA GeForce RTX 3080", PerOp::new(29770.0, 465.0, 14880.0), 760.32).unwrap()
}

fn ac1_roofline_fixture() -> Outcome {
    let balance = balance_point(52.22, 45.9).map_err(|e| e.to_string())?;
    close(balance, 1.1377, 1e-3, "balance")?;
    ensure(classify_op(0.6, balance) == Boundedness::Bandwidth, || {
        "AI 0.6 should be bandwidth-bound".into()
    })?;
    let spec = HardwareSpec::new("small gpu", PerOp::new(52.22, 52.22, 52.22), 45.9).map_err(|e| e.to_string())?;
    close(
        roofline_ceiling(0.6, &spec, OpKind::Sp),
        0.6 * 45.9,
        1e-9,
        "ceiling below the knee",
    )?;
    close(
        roofline_ceiling(2.0, &spec, OpKind::Sp),
        52.22,
        1e-9,
        "ceiling above the knee",
    )?;

    let final_balance = balance_point(73.45, 99.9).map_err(|e| e.to_string())?;
    ensure(classify_op(1.55, final_balance) == Boundedness::Compute, || {
        "AI 1.55 should be compute-bound".into()
    })?;
    ensure(
        classify_op(final_balance, final_balance) == Boundedness::Compute,
        || "a tie is compute-bound".into(),
    )?;
    Ok(format!(
        "balance {balance:.4}; AI 0.6 -> Bandwidth; AI 1.55 vs {final_balance:.4} -> Compute"
    ))
}

fn ac2_aggregation() -> Outcome {
    use Boundedness::*;
    let mut checked = 0;
    for bits in 0u8..8 {
        let pick = |i: u8| if bits >> i & 1 == 1 { Compute } else { Bandwidth };
        let per_op = PerOp::new(pick(0), pick(1), pick(2));
        let want = if bits == 0 { Bandwidth } else { Compute };
        let map: BTreeMap<OpKind, Boundedness> = per_op.iter().map(|(k, v)| (k, *v)).collect();
        ensure(aggregate_label(&per_op) == want, || {
            format!("{per_op:?} -> want {want}")
        })?;
        ensure(aggregate_label_map(&map).map_err(|e| e.to_string())? == want, || {
            format!("map {map:?}")
        })?;

        // the same combination through full profile labeling on the reference GPU
        let spec = rtx3080();
        let bytes = 1e9;
        let ops = PerOp::from_fn(|k| {
            let b = spec.balance_point(k).unwrap();
            let ai = if per_op[k] == Compute { b * 2.0 } else { b / 2.0 };
            ai * bytes
        });
        let profile = KernelProfile {
            program_id: format!("p{bits}"),
            kernel_name: "k".into(),
            language: Language::Cuda,
            op_counts: ops,
            bytes_read: bytes / 2.0,
            bytes_written: bytes / 2.0,
            exec_time_s: 1.0,
            grid: Dim3::new(1, 1, 1),
            block: Dim3::new(32, 1, 1),
            launch_args: String::new(),
        };
        let label = label_kernel(&profile, &spec).map_err(|e| e.to_string())?;
        ensure(label.label == want && label.per_op_labels() == per_op, || {
            format!("kernel {bits:03b}: {label:?}")
        })?;
        checked += 1;
    }
    Ok(format!("{checked}/8 combinations, bandwidth-bound only for (BW,BW,BW)"))
}

fn ac3_rq1_generator() -> Outcome {
    let (tasks, examples) = oracle::check_rq1(240, 0, 480)?;
    ensure(tasks == 480, || format!("{tasks} tasks"))?;
    Ok(format!(
        "{tasks} tasks recomputed; {examples} embedded examples re-derived"
    ))
}

fn synthetic_programs() -> Vec<LabeledProgram> {
    let spec = rtx3080();
    let mut out = Vec::new();
    for (language, label, n) in [
        (Language::Cuda, Boundedness::Compute, 90),
        (Language::Cuda, Boundedness::Bandwidth, 85),
        (Language::Omp, Boundedness::Compute, 120),
        (Language::Omp, Boundedness::Bandwidth, 100),
    ] {
        for i in 0..n {
            let sp = if label == Boundedness::Compute { 5e10 } else { 1e6 };
            let profile = KernelProfile {
                program_id: format!(
                    "{}-{}-{i:03}",
                    language.as_str().to_lowercase(),
                    label.as_str().to_lowercase()
                ),
                kernel_name: format!("kernel_{i}"),
                language,
                op_counts: PerOp::new(sp + i as f64, 0.0, 1e6),
                bytes_read: 3.2e7,
                bytes_written: 3.2e6,
                exec_time_s: 1e-3,
                grid: Dim3::new(64, 1, 1),
                block: Dim3::new(256, 1, 1),
                launch_args: format!("-n {i}"),
            };
            let roofline = label_kernel(&profile, &spec).unwrap();
            assert_eq!(roofline.label, label);
            out.push(LabeledProgram { profile, roofline });
        }
    }
    out
}

fn ac4_dataset_pipeline() -> Outcome {
    let programs = synthetic_programs();
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    for p in &programs {
        let dir = root.path().join(p.program_id());
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let ext = if p.profile.language == Language::Cuda {
            "cu"
        } else {
            "cpp"
        };
        fs::write(
            dir.join(format!("main.{ext}")),
            format!("// {}\nvoid {}() {{}}\n", p.program_id(), p.profile.kernel_name),
        )
        .map_err(|e| e.to_string())?;
    }
    let config = BuildConfig {
        seed: 11,
        split_fraction: SplitFraction::new(4, 5).map_err(|e| e.to_string())?,
        tokenizer_id: "estimate".into(),
        ..Default::default()
    };
    let tokenizer = tokenizer_for("estimate");
    let build =
        || build_dataset(&programs, root.path(), &rtx3080(), &config, tokenizer.as_ref()).map_err(|e| e.to_string());
    let first = build()?.dataset;

    let mut per: BTreeMap<(Language, Boundedness), (usize, usize)> = BTreeMap::new();
    for s in &first.samples {
        let e = per.entry(s.combination()).or_default();
        match s.split {
            Split::Train => e.0 += 1,
            Split::Validation => e.1 += 1,
            Split::Unassigned => return Err(format!("{} left unassigned", s.program_id)),
        }
    }
    ensure(first.samples.len() == 340, || format!("total {}", first.samples.len()))?;
    ensure(per.len() == 4 && per.values().all(|c| *c == (68, 17)), || {
        format!("per combination {per:?}")
    })?;

    let a = root.path().join("a.json");
    let b = root.path().join("b.json");
    first.save(&a).map_err(|e| e.to_string())?;
    build()?.dataset.save(&b).map_err(|e| e.to_string())?;
    let same = fs::read(&a).map_err(|e| e.to_string())? == fs::read(&b).map_err(|e| e.to_string())?;
    ensure(same, || "same seed produced different dataset files".into())?;
    Ok("90/85/120/100 -> 85 each, 340 total, 68/17 per combination, byte-identical rebuild".into())
}

fn metrics(cm: &ConfusionMatrix) -> Result<(f64, f64, f64), String> {
    let e = |e: roofline_core::eval::EvalError| e.to_string();
    Ok((accuracy(cm).map_err(e)?, macro_f1(cm).map_err(e)?, mcc(cm).map_err(e)?))
}

fn ac5_metrics() -> Outcome {
    use Boundedness::{Bandwidth as B, Compute as C};
    let truth = [C, C, C, B, B, B];
    let pred = |b: Boundedness| Prediction::from(b);

    let perfect = ConfusionMatrix::from_pairs(truth.iter().map(|t| (*t, pred(*t))));
    let (a, f, m) = metrics(&perfect)?;
    ensure((a, f, m) == (100.0, 100.0, 100.0), || format!("perfect: {a} {f} {m}"))?;

    let inverted = ConfusionMatrix::from_pairs(truth.iter().map(|t| (*t, pred(t.opposite()))));
    close(metrics(&inverted)?.2, -100.0, 1e-9, "inverted mcc")?;

    let constant = ConfusionMatrix::from_pairs(truth.iter().map(|t| (*t, Prediction::Compute)));
    let (a, f, m) = metrics(&constant)?;
    ensure(a == 50.0 && m == 0.0, || format!("constant: accuracy {a}, mcc {m}"))?;
    close(f, 33.33, 0.01, "constant macro F1")?;

    let fixture = ConfusionMatrix::from_pairs([C, C, B, B].into_iter().zip([C, B, B, B].map(pred)));
    let (a, f, _) = metrics(&fixture)?;
    close(a, 75.0, 1e-12, "fixture accuracy")?;
    close(f, 73.33, 0.01, "fixture macro F1")?;

    oracle::check_random_metrics(7, 1000)?;
    Ok("anchors hold; oracle agrees on 1000 random matrices".into())
}

fn ac6_chi_squared() -> Outcome {
    let flat = chi_squared_independence(&[vec![50, 50], vec![50, 50]]).map_err(|e| e.to_string())?;
    close(flat.statistic, 0.0, 1e-12, "flat statistic")?;
    close(flat.p_value, 1.0, 1e-9, "flat p")?;
    let skewed = chi_squared_independence(&[vec![90, 10], vec![10, 90]]).map_err(|e| e.to_string())?;
    ensure(skewed.statistic == 128.0, || format!("statistic {}", skewed.statistic))?;
    ensure(skewed.p_value < 1e-20 && skewed.p_value > 0.0, || {
        format!("p {}", skewed.p_value)
    })?;
    Ok(format!(
        "statistic 0 with p 1; statistic 128 with p {:.3e}",
        skewed.p_value
    ))
}

fn ac7_replay_determinism() -> Outcome {
    let cache = support::fixture_dir().join("cache");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let work = tempfile::tempdir().map_err(|e| e.to_string())?;
        support::prepare(work.path())?;
        let run = support::replay_and_evaluate(work.path(), &cache)?;
        for out in &run.query_stdout {
            ensure(out.contains(" 0 failed") && out.contains("; 0 network calls"), || {
                format!("query: {out}")
            })?;
        }
        reports.push(run.report_json);
    }
    ensure(reports[0] == reports[1], || "reports differ between runs".into())?;
    let golden = fs::read_to_string(support::fixture_dir().join("expected_report.json")).map_err(|e| e.to_string())?;
    ensure(reports[0] == golden, || {
        "report differs from the checked-in golden report".into()
    })?;
    Ok(format!(
        "two replays byte-identical ({} bytes), matches golden, 0 network calls",
        reports[0].len()
    ))
}

fn ac8_mock_ceiling() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    support::prepare(work.path())?;
    let cache = work.path().join("cache");
    let (zero, rq1) = support::fixture_prompts(work.path())?;
    let default = ProviderConfig::new(support::FIXTURE_MODEL);
    support::record(&cache, &default, &zero, |_, _, t| Some(t.to_string()))?;
    support::record(&cache, &support::sweep_config(), &zero, |_, _, t| Some(t.to_string()))?;
    support::record(&cache, &default, &rq1, |_, b, t| Some(support::rq1_answer(b, t)))?;
    let run = support::replay_and_evaluate(work.path(), &cache)?;
    let report: serde_json::Value = serde_json::from_str(&run.report_json).map_err(|e| e.to_string())?;
    let model = &report["models"][0];
    let families = [
        ("zero-shot", &model["zero_shot"]["overall"]),
        ("rq1 cot", &model["rq1_cot"]["2"]["overall"]),
        ("rq1 plain", &model["rq1_plain"]["2"]["overall"]),
    ];
    for (name, summary) in families {
        let (acc, m) = (summary["accuracy"].as_f64(), summary["mcc"].as_f64());
        ensure(acc == Some(100.0) && m == Some(100.0), || {
            format!("{name}: accuracy {acc:?}, mcc {m:?}")
        })?;
    }
    Ok("truthful cache scores accuracy 100 and mcc 100 on zero-shot and roofline prompts".into())
}

fn sample(id: &str, language: Language, label: Boundedness) -> DatasetSample {
    DatasetSample {
        program_id: id.into(),
        language,
        kernel_name: "stencil_2d".into(),
        grid: Dim3::new(256, 1, 1),
        block: Dim3::new(128, 1, 1),
        launch_args: "512 512 10".into(),
        source_text: "// File: main.cpp\nvoid stencil_2d(const float *in, float *out, int n);\n".into(),
        token_count: 20,
        label,
        split: Split::Validation,
        metrics: ProfileMetrics {
            op_counts: PerOp::new(1e6, 0.0, 2e6),
            bytes_read: 3.2e7,
            bytes_written: 1.6e7,
            exec_time_s: 1e-3,
        },
    }
}

fn render(bundle: &PromptBundle) -> String {
    format!("[system]\n{}\n[user]\n{}\n", bundle.system_text, bundle.user_text)
}

fn golden(name: &str, text: &str) -> Result<(), String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/prompts")
        .join(name);
    if std::env::var_os("ROOFLINE_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        return fs::write(&path, text).map_err(|e| e.to_string());
    }
    let want = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    ensure(want == text, || format!("{name} differs from golden"))
}

fn ac9_prompt_fidelity() -> Outcome {
    let spec = rtx3080();
    let target = sample("stencil-omp", Language::Omp, Boundedness::Bandwidth);
    let zero = build_zero_shot_prompt(&target, &spec).map_err(|e| e.to_string())?;
    let full = format!("{}\n{}", zero.system_text, zero.user_text);
    let required = [
        "Provide only one word as your response, chosen from the set: ['Compute', 'Bandwidth'].",
        "Example 1:\nKernel Source Code (simplified):",
        "Response: Compute",
        "Example 2:\nKernel Source Code (simplified):",
        "Response: Bandwidth",
        "Classify the OMP kernel called stencil_2d as Bandwidth or Compute bound.",
        "- peak single-precision performance of 29770 GFLOP/s\n",
        "- peak double-precision performance of 465 GFLOP/s\n",
        "- peak integer performance of 14880 GINTOP/s\n",
        "- max bandwidth of 760.32 GB/s\n",
        "The block and grid sizes of the invoked kernel are (128,1,1) and (256,1,1), respectively.",
        "[512 512 10]",
        "void stencil_2d(const float *in, float *out, int n);",
    ];
    for r in required {
        ensure(full.contains(r), || format!("zero-shot prompt lacks {r:?}"))?;
    }
    golden("zero_shot.txt", &render(&zero))?;

    let ex = |id: &str, language, label| BankExample {
        program_id: id.into(),
        language,
        label,
        kernel_name: None,
        source_text: format!("// bank example {id}\n"),
    };
    let bank = ExampleBank::new(vec![
        ex("bank-cuda-cb", Language::Cuda, Boundedness::Compute),
        ex("bank-cuda-bb", Language::Cuda, Boundedness::Bandwidth),
        ex("bank-omp-cb", Language::Omp, Boundedness::Compute),
        ex("bank-omp-bb", Language::Omp, Boundedness::Bandwidth),
    ]);
    for (language, own, other) in [(Language::Omp, "omp", "cuda"), (Language::Cuda, "cuda", "omp")] {
        let few = build_few_shot_prompt(&sample("t", language, Boundedness::Compute), &spec, &bank)
            .map_err(|e| e.to_string())?;
        let headers = few.system_text.matches("Kernel Source Code:").count();
        ensure(headers == 2, || format!("{own}: {headers} real examples"))?;
        let cb = few
            .system_text
            .find(&format!("bank example bank-{own}-cb\nResponse: Compute"));
        let bb = few
            .system_text
            .find(&format!("bank example bank-{own}-bb\nResponse: Bandwidth"));
        ensure(matches!((cb, bb), (Some(c), Some(b)) if c < b), || {
            format!("{own}: examples missing or misordered")
        })?;
        ensure(!few.system_text.contains(&format!("bank-{other}-")), || {
            format!("{own}: foreign-language example")
        })?;
        ensure(!few.system_text.contains("(simplified)"), || {
            format!("{own}: pseudo-code left in")
        })?;
        golden(&format!("few_shot_{own}.txt"), &render(&few))?;
    }
    Ok("zero-shot has every structural element; few-shot has two language-matched examples; goldens match".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1 roofline fixture", ac1_roofline_fixture),
        ("AC2 aggregation rule", ac2_aggregation),
        ("AC3 rq1 generator self-consistency", ac3_rq1_generator),
        ("AC4 dataset pipeline", ac4_dataset_pipeline),
        ("AC5 metrics suite", ac5_metrics),
        ("AC6 chi-squared", ac6_chi_squared),
        ("AC7 end-to-end replay determinism", ac7_replay_determinism),
        ("AC8 mock-model ceiling", ac8_mock_ceiling),
        ("AC9 prompt fidelity", ac9_prompt_fidelity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {name} [{ms} ms]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} [{ms} ms]: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
