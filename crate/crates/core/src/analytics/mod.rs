//! Correlation and two-sample t statistics, the Student t distribution, and
//! aggregation of per-run event logs into metrics rows.

mod dist;
mod metrics;
mod stats;

pub use dist::{regularized_incomplete_beta, student_t_cdf, two_sided_p_value};
pub use metrics::{
    aggregate_run_metrics, read_column, read_columns, read_metrics_csv, write_metrics_csv, MetricsRow, RunEvent, RunLog,
};
pub use stats::{pearson, ranks, spearman, t_test, t_test_from_summary, GroupSummary, SampleVector, TTest, TVariant};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("sample vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid group summary: {0}")]
    InvalidSummary(String),
    #[error("empty run log")]
    EmptyLog,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found")]
    UnknownColumn(String),
    #[error("row {row}, column {column:?}: {value:?} is not a number")]
    NotANumber { row: usize, column: String, value: String },
}
