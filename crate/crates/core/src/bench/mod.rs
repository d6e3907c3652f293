//! Experiment harness: balanced dataset generation, permutation-accuracy
//! evaluation and suites of experiments with CSV and plain-text reports.
//!
//! Every experiment fits and scores on the same generated set, the usual
//! convention for clustering accuracy. Labels are attached for scoring only.

mod config;
mod dataset;
mod evaluate;
mod suite;

pub use config::{
    Analysis, Circuit, Experiment, ExperimentConfig, KStageConfig, Pattern, MIN_PER_CLASS,
    MULTI_DELTAS, MULTI_THRESHOLDS, RANDOM_AMPLITUDE, RANDOM_RATES_PCT, SINGLE_PERIODIC,
};
pub use dataset::{
    featurize, generate_dataset, simulate_dataset, Dataset, SampleSignals, MEASUREMENT_NOISE,
};
pub use evaluate::{
    evaluate, evaluate_dataset, feature_variants, minority_cluster, permutation_accuracy, score,
    signal_variants, Confusion, EvaluationReport, ReportRow,
};
pub use suite::{
    render_table, run_suite, write_report_csv, Suite, SuiteEntry, SuiteReport, REPORT_HEADER,
};
