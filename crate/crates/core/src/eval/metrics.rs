//! Confusion matrices and the three headline metrics, scaled to percentages.
//!
//! An `Invalid` prediction is always wrong: it counts toward the total and, for F1
//! and MCC, behaves like a prediction of the opposite class.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::prompt::{Prediction, PromptMode};
use crate::roofline::{Boundedness, Language};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub compute_as_compute: u64,
    pub compute_as_bandwidth: u64,
    pub compute_as_invalid: u64,
    pub bandwidth_as_compute: u64,
    pub bandwidth_as_bandwidth: u64,
    pub bandwidth_as_invalid: u64,
}

/// Binary counts with `positive` as the positive class and invalid answers folded in as misses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Boundedness, prediction: Prediction) {
        let cell = match (truth, prediction) {
            (Boundedness::Compute, Prediction::Compute) => &mut self.compute_as_compute,
            (Boundedness::Compute, Prediction::Bandwidth) => &mut self.compute_as_bandwidth,
            (Boundedness::Compute, Prediction::Invalid) => &mut self.compute_as_invalid,
            (Boundedness::Bandwidth, Prediction::Compute) => &mut self.bandwidth_as_compute,
            (Boundedness::Bandwidth, Prediction::Bandwidth) => &mut self.bandwidth_as_bandwidth,
            (Boundedness::Bandwidth, Prediction::Invalid) => &mut self.bandwidth_as_invalid,
        };
        *cell += 1;
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Boundedness, Prediction)>) -> Self {
        let mut cm = Self::default();
        for (truth, prediction) in pairs {
            cm.record(truth, prediction);
        }
        cm
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            compute_as_compute: self.compute_as_compute + other.compute_as_compute,
            compute_as_bandwidth: self.compute_as_bandwidth + other.compute_as_bandwidth,
            compute_as_invalid: self.compute_as_invalid + other.compute_as_invalid,
            bandwidth_as_compute: self.bandwidth_as_compute + other.bandwidth_as_compute,
            bandwidth_as_bandwidth: self.bandwidth_as_bandwidth + other.bandwidth_as_bandwidth,
            bandwidth_as_invalid: self.bandwidth_as_invalid + other.bandwidth_as_invalid,
        }
    }

    pub fn total(&self) -> u64 {
        self.compute_as_compute
            + self.compute_as_bandwidth
            + self.compute_as_invalid
            + self.bandwidth_as_compute
            + self.bandwidth_as_bandwidth
            + self.bandwidth_as_invalid
    }

    pub fn correct(&self) -> u64 {
        self.compute_as_compute + self.bandwidth_as_bandwidth
    }

    pub fn invalid_count(&self) -> u64 {
        self.compute_as_invalid + self.bandwidth_as_invalid
    }

    pub fn binary(&self, positive: Boundedness) -> BinaryCounts {
        let (c, b) = (
            [
                self.compute_as_compute,
                self.compute_as_bandwidth + self.compute_as_invalid,
            ],
            [
                self.bandwidth_as_compute + self.bandwidth_as_invalid,
                self.bandwidth_as_bandwidth,
            ],
        );
        match positive {
            Boundedness::Compute => BinaryCounts {
                tp: c[0],
                fn_: c[1],
                fp: b[0],
                tn: b[1],
            },
            Boundedness::Bandwidth => BinaryCounts {
                tp: b[1],
                fn_: b[0],
                fp: c[1],
                tn: c[0],
            },
        }
    }

    fn non_empty(&self) -> Result<(), EvalError> {
        if self.total() == 0 {
            Err(EvalError::Empty)
        } else {
            Ok(())
        }
    }
}

fn hundred<T: Scalar>() -> T {
    T::of(100.0)
}

pub fn accuracy<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, EvalError> {
    cm.non_empty()?;
    Ok(hundred::<T>() * T::of_count(cm.correct()) / T::of_count(cm.total()))
}

fn class_f1<T: Scalar>(b: BinaryCounts) -> T {
    let denom = 2 * b.tp + b.fp + b.fn_;
    if denom == 0 {
        T::zero()
    } else {
        T::of_count(2 * b.tp) / T::of_count(denom)
    }
}

pub fn macro_f1<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, EvalError> {
    cm.non_empty()?;
    let sum = class_f1::<T>(cm.binary(Boundedness::Compute)) + class_f1::<T>(cm.binary(Boundedness::Bandwidth));
    Ok(hundred::<T>() * sum / T::of(2.0))
}

pub fn mcc<T: Scalar>(cm: &ConfusionMatrix) -> Result<T, EvalError> {
    cm.non_empty()?;
    let b = cm.binary(Boundedness::Compute);
    let [tp, fp, fn_, tn] = [b.tp, b.fp, b.fn_, b.tn].map(T::of_count);
    let den = ((tp + fp) * (tp + fn_)).sqrt() * ((tn + fp) * (tn + fn_)).sqrt();
    if den == T::zero() {
        return Ok(T::zero());
    }
    let value = (tp * tn - fp * fn_) / den;
    Ok(hundred::<T>() * value.max(-T::one()).min(T::one()))
}

/// One scored model answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub model: String,
    pub mode: PromptMode,
    pub shots: u32,
    pub target_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    pub truth: Boundedness,
    pub prediction: Prediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MetricSummary<T = f64> {
    pub n: u64,
    pub invalid_count: u64,
    pub accuracy: T,
    pub macro_f1: T,
    pub mcc: T,
    pub confusion: ConfusionMatrix,
}

impl<T: Scalar> MetricSummary<T> {
    pub fn from_matrix(cm: ConfusionMatrix) -> Result<Self, EvalError> {
        Ok(Self {
            n: cm.total(),
            invalid_count: cm.invalid_count(),
            accuracy: accuracy(&cm)?,
            macro_f1: macro_f1(&cm)?,
            mcc: mcc(&cm)?,
            confusion: cm,
        })
    }

    fn optional(cm: ConfusionMatrix) -> Option<Self> {
        Self::from_matrix(cm).ok()
    }
}

/// Joint metrics plus per-language sub-reports; a language with no records has `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MetricReport<T = f64> {
    pub overall: MetricSummary<T>,
    pub cuda: Option<MetricSummary<T>>,
    pub omp: Option<MetricSummary<T>>,
}

impl<T: Scalar> MetricReport<T> {
    pub fn language(&self, language: Language) -> Option<&MetricSummary<T>> {
        match language {
            Language::Cuda => self.cuda.as_ref(),
            Language::Omp => self.omp.as_ref(),
        }
    }
}

pub fn breakdown<'a, T: Scalar>(
    records: impl IntoIterator<Item = &'a ScoredRecord>,
) -> Result<MetricReport<T>, EvalError> {
    let mut all = ConfusionMatrix::default();
    let mut per_language: BTreeMap<Language, ConfusionMatrix> = BTreeMap::new();
    for r in records {
        all.record(r.truth, r.prediction);
        if let Some(language) = r.language {
            per_language.entry(language).or_default().record(r.truth, r.prediction);
        }
    }
    let sub = |language| per_language.get(&language).copied().and_then(MetricSummary::optional);
    Ok(MetricReport {
        overall: MetricSummary::from_matrix(all)?,
        cuda: sub(Language::Cuda),
        omp: sub(Language::Omp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use Boundedness::{Bandwidth as B, Compute as C};

    fn cm(truths: &[Boundedness], preds: &[Prediction]) -> ConfusionMatrix {
        ConfusionMatrix::from_pairs(truths.iter().copied().zip(preds.iter().copied()))
    }

    #[test]
    fn hand_worked_fixture() {
        let m = cm(
            &[C, C, B, B],
            &[
                Prediction::Compute,
                Prediction::Bandwidth,
                Prediction::Bandwidth,
                Prediction::Bandwidth,
            ],
        );
        assert_eq!(accuracy::<f64>(&m).unwrap(), 75.0);
        // per-class F1: compute 2/3, bandwidth 4/5
        assert_abs_diff_eq!(
            macro_f1::<f64>(&m).unwrap(),
            100.0 * (2.0 / 3.0 + 0.8) / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(macro_f1::<f32>(&m).unwrap(), 73.333_33, epsilon = 1e-3);
    }

    #[test]
    fn anchors() {
        let truths = [C, C, B, B];
        let perfect = cm(&truths, &truths.map(Prediction::from));
        assert_eq!(
            (
                accuracy::<f64>(&perfect).unwrap(),
                macro_f1::<f64>(&perfect).unwrap(),
                mcc::<f64>(&perfect).unwrap()
            ),
            (100.0, 100.0, 100.0)
        );
        let inverted = cm(&truths, &truths.map(|t| Prediction::from(t.opposite())));
        assert_eq!(mcc::<f64>(&inverted).unwrap(), -100.0);
        assert_eq!(accuracy::<f64>(&inverted).unwrap(), 0.0);

        let constant = cm(&truths, &[Prediction::Compute; 4]);
        assert_eq!(accuracy::<f64>(&constant).unwrap(), 50.0);
        assert_eq!(mcc::<f64>(&constant).unwrap(), 0.0);
        assert_abs_diff_eq!(macro_f1::<f64>(&constant).unwrap(), 100.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_answers_are_wrong_and_tallied() {
        let m = cm(
            &[C, C, B, B],
            &[
                Prediction::Compute,
                Prediction::Invalid,
                Prediction::Bandwidth,
                Prediction::Invalid,
            ],
        );
        assert_eq!(accuracy::<f64>(&m).unwrap(), 50.0);
        assert_eq!(m.invalid_count(), 2);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn empty_input_is_an_error() {
        let m = ConfusionMatrix::default();
        assert!(matches!(accuracy::<f64>(&m), Err(EvalError::Empty)));
        assert!(matches!(macro_f1::<f64>(&m), Err(EvalError::Empty)));
        assert!(matches!(mcc::<f64>(&m), Err(EvalError::Empty)));
    }

    fn rec(language: Language, truth: Boundedness, prediction: Prediction) -> ScoredRecord {
        ScoredRecord {
            model: "m".into(),
            mode: PromptMode::ZeroShot,
            shots: 0,
            target_id: "t".into(),
            language: Some(language),
            truth,
            prediction,
        }
    }

    #[test]
    fn breakdown_by_language() {
        let cuda_only = vec![
            rec(Language::Cuda, C, Prediction::Compute),
            rec(Language::Cuda, B, Prediction::Invalid),
        ];
        let r = breakdown::<f64>(&cuda_only).unwrap();
        assert!(r.omp.is_none());
        assert_eq!(r.cuda.as_ref().unwrap(), &r.overall);
        assert_eq!(r.overall.invalid_count, 1);

        let mut mixed = cuda_only.clone();
        mixed.extend([
            rec(Language::Omp, C, Prediction::Compute),
            rec(Language::Omp, B, Prediction::Bandwidth),
            rec(Language::Omp, B, Prediction::Invalid),
        ]);
        let r = breakdown::<f64>(&mixed).unwrap();
        let (cuda, omp) = (r.cuda.as_ref().unwrap(), r.omp.as_ref().unwrap());
        let weighted = (cuda.accuracy * cuda.n as f64 + omp.accuracy * omp.n as f64) / r.overall.n as f64;
        assert_abs_diff_eq!(weighted, r.overall.accuracy, epsilon = 1e-12);
        assert_eq!(r.overall.invalid_count, cuda.invalid_count + omp.invalid_count);
        assert!(breakdown::<f64>(&[]).is_err());
    }
}
