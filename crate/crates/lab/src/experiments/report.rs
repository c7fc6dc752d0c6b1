//! Report assembly and emission.
//!
//! Rows are typed values keyed by trial index; CSV output is RFC-4180 via
//! the csv crate with floats printed `%.17g`, JSON output carries the config
//! echo, rows, and aggregates. Everything except the wall-clock field is a
//! pure function of the configuration.

use std::io::Write;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::textio::fmt_g17;

/// One report cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    UInt(u64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    pub fn csv_field(&self) -> String {
        match self {
            Value::UInt(v) => v.to_string(),
            Value::Float(v) => fmt_g17(*v),
            Value::Bool(v) => v.to_string(),
            Value::Str(s) => s.clone(),
        }
    }

    pub fn json(&self) -> serde_json::Value {
        match self {
            Value::UInt(v) => serde_json::Value::from(*v),
            Value::Float(v) => {
                if v.is_finite() {
                    serde_json::Value::from(*v)
                } else {
                    serde_json::Value::from(fmt_g17(*v))
                }
            }
            Value::Bool(v) => serde_json::Value::from(*v),
            Value::Str(s) => serde_json::Value::from(s.clone()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            Value::UInt(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// The assembled result of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config_echo: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub aggregates: Vec<(String, Value)>,
    /// `(trial, message)` for trials whose pipeline failed; the row still
    /// exists with placeholder values so the denominator stays honest.
    pub row_errors: Vec<(usize, String)>,
    pub truncation_count: usize,
    pub hypothesis_not_met_count: usize,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    /// Computes the standard aggregate block: mean/median/quantiles for
    /// numeric columns, frequency with a Wilson interval for boolean ones.
    pub fn with_standard_aggregates(mut self) -> Self {
        let mut aggs = Vec::new();
        for (c, name) in self.columns.iter().enumerate() {
            if name == "trial" || name == "seed" {
                continue;
            }
            let mut nums: Vec<f64> = Vec::new();
            let mut bools: (usize, usize) = (0, 0);
            let mut saw_bool = false;
            let mut saw_num = false;
            for row in &self.rows {
                match &row[c] {
                    Value::Bool(b) => {
                        saw_bool = true;
                        bools.1 += 1;
                        if *b {
                            bools.0 += 1;
                        }
                    }
                    v => {
                        if let Some(x) = v.as_f64() {
                            if x.is_finite() {
                                saw_num = true;
                                nums.push(x);
                            }
                        }
                    }
                }
            }
            if saw_num && !nums.is_empty() {
                nums.sort_by(f64::total_cmp);
                let mean = nums.iter().sum::<f64>() / nums.len() as f64;
                let q = |f: f64| nums[((nums.len() - 1) as f64 * f).round() as usize];
                aggs.push((format!("{name}_mean"), Value::Float(mean)));
                aggs.push((format!("{name}_median"), Value::Float(q(0.5))));
                aggs.push((format!("{name}_q10"), Value::Float(q(0.1))));
                aggs.push((format!("{name}_q90"), Value::Float(q(0.9))));
            }
            if saw_bool && bools.1 > 0 {
                let rate = bools.0 as f64 / bools.1 as f64;
                let (lo, hi) = crate::restricted_inv::wilson_interval(bools.0, bools.1);
                aggs.push((format!("{name}_rate"), Value::Float(rate)));
                aggs.push((format!("{name}_wilson_low"), Value::Float(lo)));
                aggs.push((format!("{name}_wilson_high"), Value::Float(hi)));
            }
        }
        self.aggregates.extend(aggs);
        self
    }

    /// CSV body: header plus rows. Deterministic for a fixed config.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
        wtr.write_record(&self.columns).map_err(|e| LabError::Parse(e.to_string()))?;
        for row in &self.rows {
            let rec: Vec<String> = row.iter().map(Value::csv_field).collect();
            wtr.write_record(&rec).map_err(|e| LabError::Parse(e.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| LabError::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Parse(e.to_string()))
    }

    /// JSON document with config, rows, aggregates, and bookkeeping.
    pub fn to_json(&self) -> serde_json::Value {
        let config: serde_json::Map<String, serde_json::Value> = self
            .config_echo
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::from(v.clone())))
            .collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                serde_json::Value::Array(row.iter().map(Value::json).collect())
            })
            .collect();
        let aggregates: serde_json::Map<String, serde_json::Value> =
            self.aggregates.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let row_errors: Vec<serde_json::Value> = self
            .row_errors
            .iter()
            .map(|(t, m)| serde_json::json!({ "trial": t, "message": m }))
            .collect();
        serde_json::json!({
            "config": config,
            "columns": self.columns,
            "rows": rows,
            "aggregates": aggregates,
            "row_errors": row_errors,
            "truncation_count": self.truncation_count,
            "hypothesis_not_met_count": self.hypothesis_not_met_count,
            "wall_clock_seconds": self.wall_clock_seconds,
        })
    }
}

/// Output format selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(LabError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Writes the report into `dir/<stem>.<ext>`; returns the written path.
pub fn write_report(
    report: &ExperimentReport,
    dir: &Path,
    stem: &str,
    format: ReportFormat,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir.display().to_string(), e))?;
    let path = dir.join(format!(
        "{stem}.{}",
        match format {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    ));
    let mut file = std::fs::File::create(&path)
        .map_err(|e| LabError::io(path.display().to_string(), e))?;
    match format {
        ReportFormat::Csv => {
            let body = report.to_csv()?;
            file.write_all(body.as_bytes())
                .map_err(|e| LabError::io(path.display().to_string(), e))?;
        }
        ReportFormat::Json => {
            let doc = report.to_json();
            serde_json::to_writer_pretty(&mut file, &doc)
                .map_err(|e| LabError::io(path.display().to_string(), e.into()))?;
            file.write_all(b"\n").map_err(|e| LabError::io(path.display().to_string(), e))?;
        }
    }
    Ok(path)
}
