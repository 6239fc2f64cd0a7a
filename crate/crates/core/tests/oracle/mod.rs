//! Independent recomputations shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use roofline_core::eval::{accuracy, macro_f1, mcc, ConfusionMatrix};
use roofline_core::prompt::{build_rq1_prompt, gen_random_rooflines, Prediction};
use roofline_core::roofline::{balance_point, classify_op, roofline_ceiling, Boundedness, HardwareSpec, OpKind, PerOp};

/// Direct per-record counting, kept independent of the library's matrix bookkeeping.
pub struct MetricOracle {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub mcc: f64,
}

pub fn metric_oracle(pairs: &[(Boundedness, Prediction)]) -> MetricOracle {
    let n = pairs.len() as f64;
    let hit = |t: Boundedness, p: Prediction| p.boundedness() == Some(t);
    let correct = pairs.iter().filter(|(t, p)| hit(*t, *p)).count() as f64;

    let f1_for = |class: Boundedness| {
        let tp = pairs.iter().filter(|(t, p)| *t == class && hit(*t, *p)).count() as f64;
        let predicted_pos = pairs
            .iter()
            .filter(|(t, p)| p.boundedness() == Some(class) || (*t != class && *p == Prediction::Invalid))
            .count() as f64;
        let actual_pos = pairs.iter().filter(|(t, _)| *t == class).count() as f64;
        let precision = if predicted_pos > 0.0 { tp / predicted_pos } else { 0.0 };
        let recall = if actual_pos > 0.0 { tp / actual_pos } else { 0.0 };
        if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        }
    };

    // MCC through the Pearson correlation of indicator vectors
    let x: Vec<f64> = pairs
        .iter()
        .map(|(t, _)| f64::from(*t == Boundedness::Compute))
        .collect();
    let y: Vec<f64> = pairs
        .iter()
        .map(|(t, p)| {
            let says_compute = match p {
                Prediction::Compute => true,
                Prediction::Bandwidth => false,
                Prediction::Invalid => *t == Boundedness::Bandwidth,
            };
            f64::from(says_compute)
        })
        .collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let corr = if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    };

    MetricOracle {
        accuracy: 100.0 * correct / n,
        macro_f1: 100.0 * (f1_for(Boundedness::Compute) + f1_for(Boundedness::Bandwidth)) / 2.0,
        mcc: 100.0 * corr,
    }
}

pub fn random_pairs(rng: &mut ChaCha8Rng) -> Vec<(Boundedness, Prediction)> {
    let n = rng.random_range(1..=60);
    let invalid_rate = rng.random_range(0.0..0.3);
    (0..n)
        .map(|_| {
            let t = if rng.random_bool(0.5) {
                Boundedness::Compute
            } else {
                Boundedness::Bandwidth
            };
            let p = if rng.random_bool(invalid_rate) {
                Prediction::Invalid
            } else if rng.random_bool(0.5) {
                Prediction::Compute
            } else {
                Prediction::Bandwidth
            };
            (t, p)
        })
        .collect()
}

/// Compares the library metrics with [`metric_oracle`] on `cases` random record sets.
pub fn check_random_metrics(seed: u64, cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let pairs = random_pairs(&mut rng);
        let cm = ConfusionMatrix::from_pairs(pairs.iter().copied());
        if cm.total() != pairs.len() as u64 {
            return Err(format!("case {case}: total {} != {}", cm.total(), pairs.len()));
        }
        let o = metric_oracle(&pairs);
        let got = (
            accuracy::<f64>(&cm).map_err(|e| e.to_string())?,
            macro_f1::<f64>(&cm).map_err(|e| e.to_string())?,
            mcc::<f64>(&cm).map_err(|e| e.to_string())?,
        );
        let f32_acc = accuracy::<f32>(&cm).map_err(|e| e.to_string())? as f64;
        let f32_mcc = mcc::<f32>(&cm).map_err(|e| e.to_string())? as f64;
        if (got.0 - o.accuracy).abs() > 1e-9
            || (got.1 - o.macro_f1).abs() > 1e-9
            || (got.2 - o.mcc).abs() > 1e-9
            || (f32_acc - o.accuracy).abs() > 1e-3
            || (f32_mcc - o.mcc).abs() > 1e-3
        {
            return Err(format!(
                "case {case}: library {got:?} vs oracle ({}, {}, {}) for {pairs:?}",
                o.accuracy, o.macro_f1, o.mcc
            ));
        }
    }
    Ok(())
}

fn question_numbers(block: &str, re: &Regex) -> Result<(f64, f64, f64, f64), String> {
    let c = re.captures(block).ok_or_else(|| format!("no question in {block:?}"))?;
    let n = |i: usize| c[i].parse::<f64>().map_err(|e| e.to_string());
    Ok((n(1)?, n(2)?, n(3)?, n(4)?))
}

/// Generates `count` rooflines and recomputes every ground truth. The first `prompted`
/// tasks are also rendered at 2, 4 and 8 shots, with and without thoughts, and every
/// embedded example is re-derived from the numbers printed in the prompt.
/// Returns (tasks, embedded examples checked).
pub fn check_rq1(count: usize, seed: u64, prompted: usize) -> Result<(usize, usize), String> {
    let pairs = gen_random_rooflines(count, seed);
    let tasks: Vec<_> = pairs.iter().flat_map(|(bb, cb)| [bb, cb]).collect();
    if tasks.len() != 2 * count {
        return Err(format!("{} tasks from {count} rooflines", tasks.len()));
    }
    let bandwidth = tasks
        .iter()
        .filter(|t| t.ground_truth == Boundedness::Bandwidth)
        .count();
    if bandwidth != count {
        return Err(format!("{bandwidth} bandwidth-bound tasks, expected {count}"));
    }
    for t in &tasks {
        let spec = HardwareSpec::new(
            "gpu",
            PerOp::new(t.peak_gflops, t.peak_gflops, t.peak_gflops),
            t.bandwidth_gbs,
        )
        .map_err(|e| e.to_string())?;
        let balance = balance_point(t.peak_gflops, t.bandwidth_gbs).map_err(|e| e.to_string())?;
        if classify_op(t.queried_ai, balance) != t.ground_truth {
            return Err(format!("ground truth disagrees for {t:?}"));
        }
        if t.queried_perf_gflops > roofline_ceiling(t.queried_ai, &spec, OpKind::Sp) {
            return Err(format!("performance above the roof for {t:?}"));
        }
    }

    let question = Regex::new(
        r"max bandwidth of ([0-9.]+) GB/s and a peak performance of ([0-9.]+) GFLOP/s, if a program executed with an Arithmetic Intensity of ([0-9.]+) FLOP/Byte and a performance of ([0-9.]+) GFLOP/s",
    )
    .unwrap();
    let answer = Regex::new(r"\nAnswer: (Compute|Bandwidth)").unwrap();
    let thought = Regex::new(r"Because ([0-9.]+) ([<>]) ([0-9.]+),").unwrap();

    let mut checked = 0;
    for t in tasks.iter().take(prompted) {
        for shots in [2u32, 4, 8] {
            for cot in [true, false] {
                let prompt = build_rq1_prompt(t, shots, cot, seed).map_err(|e| e.to_string())?;
                let blocks: Vec<&str> = prompt.user_text.split("\n\n").collect();
                if blocks.len() != shots as usize + 1 {
                    return Err(format!("{}: {} blocks for {shots} shots", prompt.id, blocks.len()));
                }
                // the final bare question carries the task's own numbers, read back from text
                let (bw, peak, ai, _) = question_numbers(blocks[shots as usize], &question)?;
                if classify_op(ai, balance_point(peak, bw).map_err(|e| e.to_string())?) != t.ground_truth {
                    return Err(format!("{}: printed question disagrees with its label", prompt.id));
                }
                for block in &blocks[..shots as usize] {
                    let (bw, peak, ai, perf) = question_numbers(block, &question)?;
                    let stated: Boundedness = answer
                        .captures(block)
                        .ok_or_else(|| format!("no answer in {block:?}"))?[1]
                        .parse()
                        .map_err(|e: roofline_core::roofline::RooflineError| e.to_string())?;
                    let spec = HardwareSpec::new("gpu", PerOp::new(peak, peak, peak), bw).map_err(|e| e.to_string())?;
                    let balance = balance_point(peak, bw).map_err(|e| e.to_string())?;
                    if classify_op(ai, balance) != stated {
                        return Err(format!("wrong example answer: {block}"));
                    }
                    if !(perf > 0.0 && perf <= roofline_ceiling(ai, &spec, OpKind::Dp) + 1e-9) {
                        return Err(format!("example performance off the roofline: {block}"));
                    }
                    if cot {
                        let c = thought
                            .captures(block)
                            .ok_or_else(|| format!("no thought in {block:?}"))?;
                        let shown_ai: f64 = c[1].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
                        let shown_balance: f64 = c[3].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
                        if (&c[2] == "<") != (shown_ai < shown_balance)
                            || classify_op(shown_ai, shown_balance) != stated
                        {
                            return Err(format!("thought contradicts the answer: {block}"));
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok((tasks.len(), checked))
}
