//! Monte-Carlo driver: runs every sweep point's trials and aggregates them.

use crate::error::Result;
use crate::experiment::config::{ExperimentConfig, Scheme};
use crate::experiment::trial::{run_trial, RunContext, TrialRecord};

/// How trials of one sweep point are scheduled. Results are identical for
/// both; only wall-clock time differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism over trials on the global pool. Falls back to
    /// sequential when the crate is built without the `parallel` feature.
    Parallel,
    /// Same as `Parallel` on a dedicated pool of the given size.
    Workers(usize),
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub const METRICS: [&str; 3] = ["aer", "nmse", "ber"];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_var: String,
    pub sweep_value: String,
    pub scheme: Scheme,
    pub adc_bits: u32,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    /// Trials that produced a value for this metric.
    pub trials: usize,
    pub root_seed: u64,
}

/// Trials of one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub sweep_var: String,
    pub sweep_value: String,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub points: Vec<PointResult>,
    pub rows: Vec<SummaryRow>,
}

/// Mean and standard error of the mean, summed in the given order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Metric values of one scheme in trial order, missing values skipped.
pub fn metric_values(records: &[TrialRecord], scheme: Scheme, metric: &str) -> Vec<f64> {
    records
        .iter()
        .filter_map(|r| r.outcomes.iter().find(|o| o.scheme == scheme))
        .filter_map(|o| match metric {
            "aer" => Some(o.aer),
            "nmse" => o.nmse,
            "ber" => o.ber,
            _ => None,
        })
        .collect()
}

pub fn run_trials(config: &ExperimentConfig, exec: Execution) -> Result<Vec<TrialRecord>> {
    let ctx = RunContext::new(config)?;
    let trials = 0..config.trials;
    let records: Result<Vec<TrialRecord>> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            trials.into_par_iter().map(|t| run_trial(&ctx, t).map(|d| d.record)).collect()
        }
        #[cfg(feature = "parallel")]
        Execution::Workers(n) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| crate::error::Error::Unsupported(format!("thread pool: {e}")))?;
            pool.install(|| trials.into_par_iter().map(|t| run_trial(&ctx, t).map(|d| d.record)).collect())
        }
        _ => trials.map(|t| run_trial(&ctx, t).map(|d| d.record)).collect(),
    };
    records
}

fn summarize(point: &PointResult) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &scheme in &point.config.schemes {
        for metric in METRICS {
            let values = metric_values(&point.records, scheme, metric);
            let (mean, stderr) = mean_stderr(&values);
            rows.push(SummaryRow {
                sweep_var: point.sweep_var.clone(),
                sweep_value: point.sweep_value.clone(),
                scheme,
                adc_bits: point.config.adc_bits,
                metric: metric.to_string(),
                mean,
                stderr,
                trials: values.len(),
                root_seed: point.config.seed,
            });
        }
    }
    rows
}

/// Runs every sweep point (or the single configured point) and aggregates
/// mean and standard error per scheme and metric.
pub fn run_experiment(config: &ExperimentConfig, exec: Execution) -> Result<ResultTable> {
    let targets: Vec<(String, String, ExperimentConfig)> = match &config.sweep {
        Some(s) => s
            .values
            .iter()
            .map(|v| Ok((s.var.clone(), v.clone(), config.point(&s.var, v)?)))
            .collect::<Result<_>>()?,
        None => vec![("none".to_string(), "NA".to_string(), config.clone())],
    };
    let mut points = Vec::with_capacity(targets.len());
    let mut rows = Vec::new();
    for (var, value, cfg) in targets {
        log::info!("sweep point {var}={value}: {} trials", cfg.trials);
        let records = run_trials(&cfg, exec)?;
        let point = PointResult {
            sweep_var: var,
            sweep_value: value,
            config: cfg,
            records,
        };
        rows.extend(summarize(&point));
        points.push(point);
    }
    Ok(ResultTable {
        config: config.clone(),
        points,
        rows,
    })
}
