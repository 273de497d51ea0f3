//! Parameter sweeps over erasure probability and seed, run in parallel.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::metrics::MetricsReport;
use super::scenario::{run_scenario, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub per: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("run per={per} seed={seed}: {source}")]
    Run {
        per: f64,
        seed: u64,
        #[source]
        source: RunError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub per: f64,
    pub seed: u64,
    pub end_reason: String,
    pub end_time_us: u64,
    pub fb_delivery_ratio: Option<f64>,
    pub cmd_delivery_ratio: Option<f64>,
    pub latency_mean_us: Option<f64>,
    pub latency_p99_us: Option<f64>,
    pub max_rms_m: Option<f64>,
}

impl SweepRow {
    fn new(per: f64, seed: u64, m: &MetricsReport, end_reason: &str) -> Self {
        Self {
            per,
            seed,
            end_reason: end_reason.to_owned(),
            end_time_us: m.end_time_us,
            fb_delivery_ratio: m.fb_delivery_ratio,
            cmd_delivery_ratio: m.cmd_delivery_ratio,
            latency_mean_us: m.latency.stats.as_ref().map(|s| s.mean_us),
            latency_p99_us: m.latency.stats.as_ref().map(|s| s.p99_us),
            max_rms_m: m.cross_track.values().map(|c| c.rms_m).reduce(f64::max),
        }
    }
}

/// Mean of each numeric column over the seeds sharing one `per`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub per: f64,
    pub runs: usize,
    pub fb_delivery_ratio: Option<f64>,
    pub cmd_delivery_ratio: Option<f64>,
    pub latency_mean_us: Option<f64>,
    pub max_rms_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs every grid point. When `out` is given each run writes its trace and
/// metrics into its own subdirectory.
pub fn sweep(template: &ScenarioConfig, grid: &SweepGrid, out: Option<&Path>) -> Result<SweepReport, SweepError> {
    if grid.per.is_empty() || grid.seeds.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let points: Vec<(f64, u64)> = grid
        .per
        .iter()
        .flat_map(|&p| grid.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results: Vec<Result<SweepRow, SweepError>> = points
        .par_iter()
        .map(|&(per, seed)| {
            let mut cfg = template.clone().with_uniform_per(per);
            cfg.seed = seed;
            let run = run_scenario(&cfg).map_err(|source| SweepError::Run { per, seed, source })?;
            let row = SweepRow::new(per, seed, &run.metrics, &run.end_reason);
            if let Some(dir) = out {
                let dir = dir.join(format!("per{per}_seed{seed}"));
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("trace.csv"), run.trace.to_csv_bytes())?;
                std::fs::write(dir.join("metrics.json"), run.metrics.to_json())?;
            }
            Ok(row)
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    let summary = grid
        .per
        .iter()
        .map(|&per| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.per == per).collect();
            SweepSummary {
                per,
                runs: group.len(),
                fb_delivery_ratio: mean(group.iter().map(|r| r.fb_delivery_ratio)),
                cmd_delivery_ratio: mean(group.iter().map(|r| r.cmd_delivery_ratio)),
                latency_mean_us: mean(group.iter().map(|r| r.latency_mean_us)),
                max_rms_m: mean(group.iter().map(|r| r.max_rms_m)),
            }
        })
        .collect();
    Ok(SweepReport { rows, summary })
}

impl SweepReport {
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.summary {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
