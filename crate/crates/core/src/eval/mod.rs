//! Scoring, statistical testing and report emission.

mod chi2;
mod metrics;
mod plot;
mod report;

use thiserror::Error;

use crate::io::FileError;

pub use chi2::{chi_squared_independence, chi_squared_sf, gamma_q, ln_gamma, ChiSquared};
pub use metrics::{
    accuracy, breakdown, macro_f1, mcc, BinaryCounts, ConfusionMatrix, MetricReport, MetricSummary, ScoredRecord,
};
pub use plot::{emit_roofline_plot_data, render_roofline_plot_data, PLOT_COLUMNS};
pub use report::{
    chi_squared_sweep, emit_report, summarize, ChiSquaredBlock, EvalReport, ModelResults, ReportFormat, SortKey,
    REPORT_SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no scored records")]
    Empty,
    #[error("degenerate contingency table: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    File(#[from] FileError),
}
