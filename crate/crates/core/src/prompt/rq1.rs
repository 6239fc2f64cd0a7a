//! Random-roofline questions with worked examples.
//!
//! Every generated number is quantized to its two-decimal display value before the
//! ground truth is computed, so the prompt text alone determines the answer. Draws
//! that would put the displayed intensity on the wrong side of the displayed balance
//! point are rejected and redrawn.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{display2, round2, PromptBundle, PromptError, PromptMode};
use crate::roofline::{balance_point, classify_op, Boundedness};

/// A single roofline classification question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomRooflineTask {
    pub id: String,
    pub bandwidth_gbs: f64,
    pub peak_gflops: f64,
    pub queried_ai: f64,
    pub queried_perf_gflops: f64,
    pub ground_truth: Boundedness,
}

impl RandomRooflineTask {
    pub fn balance(&self) -> f64 {
        self.peak_gflops / self.bandwidth_gbs
    }

    pub fn ceiling(&self) -> f64 {
        self.peak_gflops.min(self.queried_ai * self.bandwidth_gbs)
    }
}

/// Sampling ranges. Intensities are drawn as a multiple of the balance point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rq1Ranges {
    pub bandwidth_gbs: (f64, f64),
    pub peak_gflops: (f64, f64),
    pub bandwidth_bound_factor: (f64, f64),
    pub compute_bound_factor: (f64, f64),
}

impl Default for Rq1Ranges {
    fn default() -> Self {
        Self {
            bandwidth_gbs: (20.0, 2000.0),
            peak_gflops: (20.0, 20000.0),
            bandwidth_bound_factor: (0.05, 0.9),
            compute_bound_factor: (1.1, 10.0),
        }
    }
}

const MAX_AI_DRAWS: usize = 64;

fn draw_roofline(rng: &mut ChaCha8Rng, ranges: &Rq1Ranges) -> (f64, f64) {
    let bw = round2(rng.random_range(ranges.bandwidth_gbs.0..=ranges.bandwidth_gbs.1));
    let peak = round2(rng.random_range(ranges.peak_gflops.0..=ranges.peak_gflops.1));
    (bw, peak)
}

/// Draws a displayed intensity and performance for `class`, or `None` when this
/// roofline cannot host a cleanly displayable question of that class.
fn draw_query(rng: &mut ChaCha8Rng, ranges: &Rq1Ranges, bw: f64, peak: f64, class: Boundedness) -> Option<(f64, f64)> {
    let balance = peak / bw;
    let shown_balance = round2(balance);
    let (lo, hi) = match class {
        Boundedness::Bandwidth => ranges.bandwidth_bound_factor,
        Boundedness::Compute => ranges.compute_bound_factor,
    };
    for _ in 0..MAX_AI_DRAWS {
        let ai = round2(rng.random_range(lo..=hi) * balance);
        let clean = match class {
            Boundedness::Bandwidth => ai > 0.0 && ai < balance && ai < shown_balance,
            Boundedness::Compute => ai >= balance && ai > shown_balance,
        };
        if !clean {
            continue;
        }
        let ceiling = peak.min(ai * bw);
        // floor keeps the shown performance under the ceiling
        let perf = (rng.random_range(0.0..=ceiling) * 100.0).floor() / 100.0;
        if perf > 0.0 {
            return Some((ai, perf));
        }
    }
    None
}

fn draw_pair(rng: &mut ChaCha8Rng, ranges: &Rq1Ranges, id_prefix: &str) -> (RandomRooflineTask, RandomRooflineTask) {
    loop {
        let (bw, peak) = draw_roofline(rng, ranges);
        let Some((bb_ai, bb_perf)) = draw_query(rng, ranges, bw, peak, Boundedness::Bandwidth) else {
            continue;
        };
        let Some((cb_ai, cb_perf)) = draw_query(rng, ranges, bw, peak, Boundedness::Compute) else {
            continue;
        };
        let balance = balance_point(peak, bw).expect("sampled ranges are positive");
        let task = |suffix: &str, ai: f64, perf: f64| RandomRooflineTask {
            id: format!("{id_prefix}-{suffix}"),
            bandwidth_gbs: bw,
            peak_gflops: peak,
            queried_ai: ai,
            queried_perf_gflops: perf,
            ground_truth: classify_op(ai, balance),
        };
        return (task("bb", bb_ai, bb_perf), task("cb", cb_ai, cb_perf));
    }
}

/// `count` random rooflines, each with one bandwidth-bound and one compute-bound task.
pub fn gen_random_rooflines(count: usize, seed: u64) -> Vec<(RandomRooflineTask, RandomRooflineTask)> {
    let ranges = Rq1Ranges::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| draw_pair(&mut rng, &ranges, &format!("rq1-{seed}-{i:04}")))
        .collect()
}

pub fn render_question(task: &RandomRooflineTask) -> String {
    format!(
        "Question: Given a GPU having a global memory with a max bandwidth of {} GB/s and a peak performance of {} GFLOP/s, \
         if a program executed with an Arithmetic Intensity of {} FLOP/Byte and a performance of {} GFLOP/s, \
         does the roofline model consider the program as compute-bound or bandwidth-bound?",
        display2(task.bandwidth_gbs),
        display2(task.peak_gflops),
        display2(task.queried_ai),
        display2(task.queried_perf_gflops),
    )
}

pub fn render_thought(task: &RandomRooflineTask) -> String {
    let bw = display2(task.bandwidth_gbs);
    let peak = display2(task.peak_gflops);
    let balance = display2(task.balance());
    let ai = display2(task.queried_ai);
    let (cmp, side, region) = match task.ground_truth {
        Boundedness::Bandwidth => ("<", "before", "bandwidth-bound"),
        Boundedness::Compute => (">", "after", "compute-bound"),
    };
    format!(
        "Thought: The max bandwidth is {bw} GB/s, and peak performance is {peak} GFLOP/s. \
         The balance point is at {peak} / {bw} = {balance} FLOP/Byte. \
         The program's Arithmetic Intensity is {ai} FLOP/Byte. \
         Because {ai} {cmp} {balance}, it is {side} the balance point, putting the program in the {region} region. \
         The roofline model would consider the program as {region}."
    )
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Worked examples from fresh rooflines followed by the task's bare question.
/// Examples are half bandwidth-bound, half compute-bound, in seeded order.
pub fn build_rq1_prompt(
    task: &RandomRooflineTask,
    shots: u32,
    with_cot: bool,
    seed: u64,
) -> Result<PromptBundle, PromptError> {
    let mode = if with_cot {
        PromptMode::Rq1Cot
    } else {
        PromptMode::Rq1Plain
    };
    mode.check_shots(shots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&task.id));
    let ranges = Rq1Ranges::default();
    let mut examples = Vec::with_capacity(shots as usize);
    for i in 0..shots / 2 {
        let (bb, cb) = draw_pair(&mut rng, &ranges, &format!("{}-example{i}", task.id));
        examples.push(bb);
        examples.push(cb);
    }
    examples.shuffle(&mut rng);

    let mut blocks: Vec<String> = examples
        .iter()
        .map(|ex| {
            let mut block = render_question(ex);
            if with_cot {
                block.push('\n');
                block.push_str(&render_thought(ex));
            }
            block.push_str("\nAnswer: ");
            block.push_str(ex.ground_truth.as_str());
            block
        })
        .collect();
    blocks.push(render_question(task));

    Ok(PromptBundle {
        id: format!("{}-s{shots}-{}", task.id, if with_cot { "cot" } else { "plain" }),
        mode,
        shots,
        target_id: task.id.clone(),
        language: None,
        system_text: String::new(),
        user_text: blocks.join("\n\n"),
    })
}
