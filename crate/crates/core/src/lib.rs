//! Roofline classification of GPU kernels and the tooling around it: profile
//! ingestion, dataset construction, prompt generation and scoring.
//!
//! The roofline math and the metrics are generic over [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases below name the common instantiations.

pub mod dataset;
pub mod eval;
pub mod ingest;
pub mod io;
pub mod prompt;
pub mod roofline;
pub mod scalar;
pub(crate) mod serde_float;
pub mod tokenizer;

pub use scalar::Scalar;

pub type HardwareSpecF64 = roofline::HardwareSpec<f64>;
pub type HardwareSpecF32 = roofline::HardwareSpec<f32>;
pub type KernelProfileF64 = roofline::KernelProfile<f64>;
pub type KernelProfileF32 = roofline::KernelProfile<f32>;
pub type RooflinePointF64 = roofline::RooflinePoint<f64>;
pub type RooflinePointF32 = roofline::RooflinePoint<f32>;
pub type KernelLabelF64 = roofline::KernelLabel<f64>;
pub type KernelLabelF32 = roofline::KernelLabel<f32>;
pub type MetricSummaryF32 = eval::MetricSummary<f32>;
pub type MetricReportF32 = eval::MetricReport<f32>;
