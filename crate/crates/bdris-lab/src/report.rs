//! Result rows, CSV persistence, and summary statistics.

use serde::{Deserialize, Serialize};
use std::path::Path;

/// One measurement: `(experiment, arch, sweep value, trial, metric)` with the
/// per-trial seed tag. The `ms` column is reserved and always zero so reruns
/// stay byte-identical; wall time is reported on stdout instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub arch: String,
    pub sweep: f64,
    pub trial: u64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub ms: u64,
}

/// Mean/std aggregate per `(arch, sweep, metric)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub arch: String,
    pub sweep: f64,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator), 0 for a single trial.
    pub std: f64,
    pub count: u64,
}

/// Deterministic row order: `(arch, sweep, trial, metric)`.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.arch
            .cmp(&b.arch)
            .then(a.sweep.partial_cmp(&b.sweep).expect("finite sweep"))
            .then(a.trial.cmp(&b.trial))
            .then(a.metric.cmp(&b.metric))
    });
}

/// Aggregates rows into per-sweep-point statistics.
///
/// The `error` metric is excluded; everything else is averaged in trial
/// order, so the result is independent of worker count.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut rows: Vec<ResultRow> = rows.to_vec();
    rows.sort_by(|a, b| {
        a.arch
            .cmp(&b.arch)
            .then(a.sweep.partial_cmp(&b.sweep).expect("finite sweep"))
            .then(a.metric.cmp(&b.metric))
            .then(a.trial.cmp(&b.trial))
    });
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut key: Option<(String, f64, String)> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut experiment = String::new();

    let flush = |key: &Option<(String, f64, String)>, values: &mut Vec<f64>, experiment: &str, out: &mut Vec<SummaryRow>| {
        if let Some((arch, sweep, metric)) = key {
            if !values.is_empty() {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = if values.len() > 1 {
                    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                out.push(SummaryRow {
                    experiment: experiment.to_string(),
                    arch: arch.clone(),
                    sweep: *sweep,
                    metric: metric.clone(),
                    mean,
                    std,
                    count: values.len() as u64,
                });
            }
            values.clear();
        }
    };

    for row in &rows {
        if row.metric == "error" {
            continue;
        }
        let this = (row.arch.clone(), row.sweep, row.metric.clone());
        if key.as_ref() != Some(&this) {
            flush(&key, &mut values, &experiment, &mut out);
            key = Some(this);
            experiment = row.experiment.clone();
        }
        values.push(row.value);
    }
    flush(&key, &mut values, &experiment, &mut out);
    out.sort_by(|a, b| {
        a.arch
            .cmp(&b.arch)
            .then(a.sweep.partial_cmp(&b.sweep).expect("finite sweep"))
            .then(a.metric.cmp(&b.metric))
    });
    out
}

/// Writes rows as UTF-8 CSV with the fixed header
/// `experiment,arch,sweep,trial,metric,value,seed,ms`.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> anyhow::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    writer
        .write_record(["experiment", "arch", "sweep", "trial", "metric", "value", "seed", "ms"])
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    }
    writer
        .flush()
        .map_err(|e| anyhow::anyhow!("cannot flush {}: {e}", path.display()))?;
    Ok(())
}

/// Parses a results CSV back into rows.
pub fn read_csv(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(|e| anyhow::anyhow!("cannot parse {}: {e}", path.display()))?);
    }
    Ok(rows)
}

/// Writes the summary table as CSV.
pub fn emit_summary_csv(summary: &[SummaryRow], path: &Path) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    for row in summary {
        writer
            .serialize(row)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    }
    writer
        .flush()
        .map_err(|e| anyhow::anyhow!("cannot flush {}: {e}", path.display()))?;
    Ok(())
}

/// Plain-text summary table for stdout.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = String::from("arch                        sweep       metric        mean          std       n\n");
    for s in summary {
        out.push_str(&format!(
            "{:<26} {:>8} {:>12} {:>12.5e} {:>11.3e} {:>6}\n",
            s.arch, s.sweep, s.metric, s.mean, s.std, s.count
        ));
    }
    out
}
