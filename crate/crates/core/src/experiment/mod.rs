//! Configuration-driven Monte-Carlo harness: trials, metrics and result
//! files.

pub mod config;
pub mod metrics;
pub mod output;
pub mod runner;
pub mod trial;

pub use config::{ExperimentConfig, Scheme, Sweep, REQUIRED_KEYS, SWEEPABLE_KEYS};
pub use metrics::{compute_aer, compute_nmse};
pub use output::{emit_results, read_csv, write_csv, CsvRow, CSV_COLUMNS};
pub use runner::{mean_stderr, metric_values, run_experiment, run_trials, Execution, PointResult, ResultTable, SummaryRow};
pub use trial::{run_trial, RunContext, SchemeOutcome, TrialDetail, TrialRecord};
