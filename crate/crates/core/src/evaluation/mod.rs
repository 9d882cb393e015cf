//! AUC, precision/recall/F1, threshold selection, the attention-head sweep
//! and report emission.

mod metrics;
mod report;
mod sweep;

pub use metrics::{auc, best_f1_threshold, evaluate, prf_at, MetricsReport};
pub use report::{
    emit_report, render_csv, render_json, Report, ReportFormat, ReportRow, CSV_HEADER,
};
pub use sweep::{head_sweep, SweepEntry, SweepResult};
