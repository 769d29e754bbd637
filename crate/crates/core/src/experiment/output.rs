//! CSV and JSON result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::runner::{ResultTable, SummaryRow};

pub const CSV_COLUMNS: [&str; 9] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "adc_bits",
    "metric",
    "mean",
    "stderr",
    "trials",
    "root_seed",
];

/// One CSV line. A metric with no value in any trial has `mean` and
/// `stderr` written as `NaN` (`null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sweep_var: String,
    pub sweep_value: String,
    pub scheme: String,
    pub adc_bits: u32,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub root_seed: u64,
}

impl From<&SummaryRow> for CsvRow {
    fn from(r: &SummaryRow) -> Self {
        Self {
            sweep_var: r.sweep_var.clone(),
            sweep_value: r.sweep_value.clone(),
            scheme: r.scheme.name().to_string(),
            adc_bits: r.adc_bits,
            metric: r.metric.clone(),
            mean: r.mean,
            stderr: r.stderr,
            trials: r.trials,
            root_seed: r.root_seed,
        }
    }
}

#[derive(Debug, Serialize)]
struct JsonDoc<'a> {
    config: &'a BTreeMap<String, String>,
    columns: [&'static str; 9],
    rows: Vec<CsvRow>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Output {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

/// Writes `results.csv` and `results.json` into `dir` (created if needed)
/// and returns their paths.
pub fn emit_results(table: &ResultTable, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let rows: Vec<CsvRow> = table.rows.iter().map(CsvRow::from).collect();
    let csv_path = dir.join("results.csv");
    write_csv(&rows, &csv_path)?;
    let doc = JsonDoc {
        config: table.config.entries(),
        columns: CSV_COLUMNS,
        rows,
    };
    let json_path = dir.join("results.json");
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| io_err(&json_path, e))?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| io_err(&json_path, e))?;
    Ok((csv_path, json_path))
}
