//! Monte Carlo experiment harness: flat key=value configs, per-kind trial
//! pipelines, and CSV/JSON report emission.

mod config;
mod report;
mod runner;

pub use config::{load_config, parse_complex, ExperimentConfig, ExperimentKind, ALL_KINDS};
pub use report::{write_report, ExperimentReport, ReportFormat, Value};
pub use runner::{cited_operations, columns_for, run_experiment};
