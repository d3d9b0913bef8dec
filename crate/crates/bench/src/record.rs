//! Trial records and experiment summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Status {
    Ok,
    Skipped(String),
    Error(String),
}

/// One trial. Everything except `runtime_ns` is a function of the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: String,
    pub experiment: ExperimentId,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub status: Status,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ns: Option<u64>,
}

impl TrialRecord {
    pub fn id_for(experiment: ExperimentId, n: usize, trial: usize) -> String {
        format!("{}:{n}:{trial}", experiment.name())
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }

    pub fn bool(&self, key: &str) -> Option<bool> {
        self.values.get(key).and_then(Value::as_bool)
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// The record with wall-clock fields removed.
    pub fn without_runtime(&self) -> TrialRecord {
        TrialRecord {
            runtime_ns: None,
            ..self.clone()
        }
    }
}

/// Aggregates for one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub trials: usize,
    pub failed: usize,
    pub metrics: BTreeMap<String, f64>,
    pub records: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentId,
    pub rows: Vec<SummaryRow>,
    /// Aggregates across lengths (scaling slopes and the like).
    pub global: BTreeMap<String, f64>,
}

impl Summary {
    pub fn row(&self, n: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn metric(&self, n: usize, key: &str) -> Option<f64> {
        self.row(n).and_then(|r| r.metrics.get(key).copied())
    }

    /// Wide CSV: one row per length, one column per metric, record ids last.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let keys: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.metrics.keys()).collect();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["experiment".to_string(), "n".into(), "trials".into(), "failed".into()];
        header.extend(keys.iter().map(|k| k.to_string()));
        header.push("records".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut line = vec![
                self.experiment.name().to_string(),
                r.n.to_string(),
                r.trials.to_string(),
                r.failed.to_string(),
            ];
            line.extend(
                keys.iter()
                    .map(|k| r.metrics.get(*k).map(|v| v.to_string()).unwrap_or_default()),
            );
            line.push(r.records.join(";"));
            w.write_record(&line)?;
        }
        for (k, v) in &self.global {
            let mut line = vec![
                self.experiment.name().to_string(),
                "all".into(),
                String::new(),
                String::new(),
            ];
            line.extend(keys.iter().map(|_| String::new()));
            line.push(format!("{k}={v}"));
            w.write_record(&line)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Nearest-rank quantile.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = mean(&pts.iter().map(|p| p.0).collect::<Vec<_>>());
    let my = mean(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}
