//! Consistency checks over a finished sweep directory.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{aggregate, read_aggregate, read_summary, trace_path, ExperimentConfig};
use crate::env::RunRecord;
use crate::error::Result;
use crate::TOL;

#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub traces_checked: usize,
    pub aggregate_rows: usize,
    /// Largest absolute difference between stored and recomputed aggregates.
    pub max_aggregate_diff: f64,
    pub problems: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

fn check_trace(name: &str, record: &RunRecord, horizon: u64, problems: &mut Vec<String>) {
    if record.rows.len() as u64 != horizon {
        problems.push(format!("{name}: {} rows, expected {horizon}", record.rows.len()));
    }
    let mut sum = 0.0;
    for (i, row) in record.rows.iter().enumerate() {
        sum += row.gap;
        if row.t != i as u64 + 1 {
            problems.push(format!("{name}: row {} has t = {}", i + 1, row.t));
            return;
        }
        if row.gap < -TOL {
            problems.push(format!("{name}: negative gap at t = {}", row.t));
            return;
        }
        if (row.cum_regret - sum).abs() > TOL * (1.0 + sum) {
            problems.push(format!("{name}: cumulative regret drifts at t = {}", row.t));
            return;
        }
    }
}

/// Re-reads every trace of the sweep in `dir`, checks it, recomputes the
/// aggregate curve and final regrets and compares them to the stored files.
pub fn audit(dir: &Path) -> Result<AuditReport> {
    let config = ExperimentConfig::from_json(&fs::read_to_string(dir.join("config.json"))?)?;
    let summary = read_summary(dir)?;
    let stored = read_aggregate(&dir.join("aggregate.csv"))?;
    let mut report = AuditReport { aggregate_rows: stored.len(), ..Default::default() };

    if summary.config_hash != config.hash() {
        report.problems.push("summary was produced by a different config".into());
    }
    let mut recomputed = Vec::new();
    for alg in &config.algorithms {
        let label = alg.label();
        let mut records = Vec::new();
        for &seed in &config.seeds {
            let path = trace_path(dir, &label, seed);
            let record = RunRecord::read_csv(fs::File::open(&path)?)?;
            check_trace(&format!("{label}/seed{seed}"), &record, config.t, &mut report.problems);
            records.push(record);
            report.traces_checked += 1;
        }
        if let Some(f) = summary.finals.iter().find(|f| f.algorithm == label) {
            let finals: Vec<f64> = records.iter().map(RunRecord::final_regret).collect();
            if finals != f.finals {
                report.problems.push(format!("{label}: final regrets differ from the summary"));
            }
        } else {
            report.problems.push(format!("{label}: missing from the summary"));
        }
        if records.iter().all(|r| r.rows.len() as u64 == config.t) {
            let refs: Vec<&RunRecord> = records.iter().collect();
            recomputed.extend(aggregate(&label, &refs, config.t, summary.downsample));
        }
    }
    if recomputed.len() != stored.len() {
        report.problems.push(format!("aggregate has {} rows, expected {}", stored.len(), recomputed.len()));
    }
    for (a, b) in stored.iter().zip(&recomputed) {
        if a.t != b.t || a.algorithm != b.algorithm {
            report.problems.push(format!("aggregate row mismatch at t = {} ({})", a.t, a.algorithm));
            break;
        }
        let diff = (a.mean_regret - b.mean_regret).abs().max((a.std_regret - b.std_regret).abs());
        report.max_aggregate_diff = report.max_aggregate_diff.max(diff);
    }
    if report.max_aggregate_diff != 0.0 {
        report.problems.push(format!("aggregate differs from traces by {}", report.max_aggregate_diff));
    }
    Ok(report)
}
