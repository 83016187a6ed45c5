//! Paired t-tests, significance stars, and report emission.
//!
//! p-values are two-sided and come from the regularised incomplete beta
//! function evaluated by continued fraction.

mod report;
mod special;
mod ttest;

use std::path::PathBuf;

pub use report::{build_report, Aggregate, Family, MetricReport, MetricValue, TestEntry, TestOutcome, REPORT_VERSION};
pub use special::{ln_gamma, reg_inc_beta, student_t_two_sided};
pub use ttest::{assign_stars, paired_t_test, PairedTestResult, Stars};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired observations, got {0}")]
    TooFew(usize),
    #[error("differences have zero variance; p-value undefined")]
    DegenerateVariance,
    #[error("no metric values to report")]
    EmptyReport,
    #[error("duplicate metric value: {0}")]
    Duplicate(String),
    #[error("non-finite metric value: {0}")]
    NonFinite(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
