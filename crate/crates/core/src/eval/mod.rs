//! Seeded repeated trials, confusion counts and the detection metrics.

mod experiment;
mod metrics;

pub use experiment::{
    check_trial, run_experiment, run_trial, trial_tables, write_report, write_summary, DataSource, DatasetMeans,
    ExperimentReport, PreparedDataset, SplitPlan, TrialResult, REPORT_HEADER,
};
pub use metrics::{confusion, metrics, ConfusionCounts, Metrics};
