//! Source-code classification prompts (zero-shot and two-shot).

use super::bank::ExampleBank;
use super::{display2, PromptBundle, PromptError, PromptMode};
use crate::dataset::DatasetSample;
use crate::roofline::{Boundedness, HardwareSpec};

/// Role, class definitions and answer format shared by both source-code prompts.
pub const SYSTEM_PREAMBLE: &str = "You are a GPU performance analysis expert that classifies kernels into \
Arithmetic Intensity Roofline model categories based on their source code characteristics. \
Your task is to provide one of the following performance boundedness classifications: Compute or Bandwidth.

A kernel is considered Compute bound if its performance is primarily limited by the number of operations it performs, \
and Bandwidth bound if its performance is primarily limited by the rate at which data can be moved between memory \
and processing units.

Provide only one word as your response, chosen from the set: ['Compute', 'Bandwidth'].";

const PSEUDO_COMPUTE: &str = "for i = 0 to 1000000 {
  a[i] = a[i] + b[i];
}";

const PSEUDO_BANDWIDTH: &str = "for i = 0 to 10 {
  load_data(large_array);
  process_data(large_array);
  store_data(large_array);
}";

fn example_block(index: usize, header: &str, code: &str, label: Boundedness) -> String {
    format!(
        "Example {index}:\n{header}\n{}\nResponse: {label}",
        code.trim_end_matches('\n')
    )
}

fn system_text(examples: [String; 2]) -> String {
    format!("{SYSTEM_PREAMBLE}\n\nExamples:\n\n{}\n\n{}", examples[0], examples[1])
}

fn require<'a>(name: &'static str, value: &'a str) -> Result<&'a str, PromptError> {
    if value.trim().is_empty() {
        Err(PromptError::MissingField(name))
    } else {
        Ok(value)
    }
}

fn user_text(sample: &DatasetSample, spec: &HardwareSpec<f64>) -> Result<String, PromptError> {
    let kernel = require("kernel name", &sample.kernel_name)?;
    let gpu = require("GPU model", &spec.name)?;
    let source = require("source code", &sample.source_text)?;
    let language = sample.language;
    Ok(format!(
        "Now, analyze the following source codes for the requested kernel of the specified hardware.

Classify the {language} kernel called {kernel} as Bandwidth or Compute bound. The system it will execute on is a {gpu} with:
- peak single-precision performance of {sp} GFLOP/s
- peak double-precision performance of {dp} GFLOP/s
- peak integer performance of {int} GINTOP/s
- max bandwidth of {bw} GB/s

The block and grid sizes of the invoked kernel are {block} and {grid}, respectively.
The executable running this kernel is launched with the following command-line arguments: [{args}].

Below is the source code of the requested {language} kernel:

{source}",
        sp = display2(spec.peak.sp),
        dp = display2(spec.peak.dp),
        int = display2(spec.peak.int),
        bw = display2(spec.bandwidth_gbs),
        block = sample.block,
        grid = sample.grid,
        args = sample.launch_args.trim(),
    ))
}

/// Zero-shot prompt with the two pseudo-code examples.
pub fn build_zero_shot_prompt(sample: &DatasetSample, spec: &HardwareSpec<f64>) -> Result<PromptBundle, PromptError> {
    let header = "Kernel Source Code (simplified):";
    let system = system_text([
        example_block(1, header, PSEUDO_COMPUTE, Boundedness::Compute),
        example_block(2, header, PSEUDO_BANDWIDTH, Boundedness::Bandwidth),
    ]);
    Ok(PromptBundle {
        id: format!("zero-{}", sample.program_id),
        mode: PromptMode::ZeroShot,
        shots: 0,
        target_id: sample.program_id.clone(),
        language: Some(sample.language),
        system_text: system,
        user_text: user_text(sample, spec)?,
    })
}

/// Two-shot prompt: the pseudo-code examples are replaced by one real compute-bound
/// and one real bandwidth-bound program in the sample's language.
pub fn build_few_shot_prompt(
    sample: &DatasetSample,
    spec: &HardwareSpec<f64>,
    bank: &ExampleBank,
) -> Result<PromptBundle, PromptError> {
    let header = "Kernel Source Code:";
    let compute = bank.pick(sample.language, Boundedness::Compute)?;
    let bandwidth = bank.pick(sample.language, Boundedness::Bandwidth)?;
    for ex in [compute, bandwidth] {
        if ex.program_id == sample.program_id {
            return Err(PromptError::BankOverlap(ex.program_id.clone()));
        }
    }
    let system = system_text([
        example_block(1, header, &compute.source_text, Boundedness::Compute),
        example_block(2, header, &bandwidth.source_text, Boundedness::Bandwidth),
    ]);
    Ok(PromptBundle {
        id: format!("few-{}", sample.program_id),
        mode: PromptMode::FewShot,
        shots: 2,
        target_id: sample.program_id.clone(),
        language: Some(sample.language),
        system_text: system,
        user_text: user_text(sample, spec)?,
    })
}
