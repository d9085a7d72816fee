use std::path::PathBuf;

use netwatch_core::baseline::build_baseline;
use netwatch_core::series::{moving_average, regularize, GapPolicy};
use netwatch_core::time::SECS_PER_WEEK;
use netwatch_core::Timestamp;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::{rate, tagged, Stopwatch};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::baseline::{baseline_path, save_baseline};
use crate::ingest::HistoryStore;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricBuild {
    pub metric_id: String,
    pub points: usize,
    pub invalid_lines: usize,
    pub weeks_used: u32,
    pub valid_slots: usize,
    pub slots: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineFailure {
    pub metric_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub as_of: Timestamp,
    pub metrics_processed: usize,
    pub points_read: usize,
    pub built: Vec<MetricBuild>,
    pub failures: Vec<BaselineFailure>,
    pub elapsed_secs: f64,
    pub points_per_sec: f64,
}

impl BaselineReport {
    pub fn lines(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.built.iter().map(|b| tagged("metric", "baseline", b)).collect();
        out.extend(self.failures.iter().map(|f| tagged("failure", "baseline", f)));
        out.push(tagged(
            "summary",
            "baseline",
            &serde_json::json!({
                "as_of": self.as_of,
                "metrics_processed": self.metrics_processed,
                "built": self.built.len(),
                "failed": self.failures.len(),
                "points_read": self.points_read,
                "elapsed_secs": self.elapsed_secs,
                "points_per_sec": self.points_per_sec,
            }),
        ));
        out
    }
}

/// Rebuild the baseline of every configured metric from the `weeks_back`
/// weeks before `as_of`. A metric that fails is reported and skipped.
pub fn cmd_baseline(cfg: &RunConfig, as_of: Timestamp) -> Result<BaselineReport> {
    let clock = Stopwatch::start();
    let bcfg = cfg.baseline.config();
    bcfg.validate()?;
    let history = HistoryStore::new(cfg.history_dir());
    let metrics = if cfg.baseline.metrics.is_empty() {
        history.metrics()?
    } else {
        cfg.baseline.metrics.clone()
    };
    let dir = cfg.baseline_dir();
    let from = as_of - bcfg.weeks_back as i64 * SECS_PER_WEEK;
    // One window of warm-up so the first in-range sample is fully smoothed.
    let read_from = from - bcfg.window.as_secs();

    let results: Vec<(String, Result<MetricBuild>, usize)> = metrics
        .par_iter()
        .map(|m| {
            let mut points = 0;
            let res = (|| {
                let (raw, report) = history
                    .read_range(m, read_from, as_of)?
                    .ok_or_else(|| Error::Config(format!("no history for metric {m}")))?;
                points = raw.len();
                let series = regularize(m, raw, bcfg.resolution, GapPolicy::LeaveGap, cfg.baseline.aggregation(m))
                    .map_err(|e| match e {
                        netwatch_core::Error::NoData => netwatch_core::Error::InsufficientHistory,
                        e => e,
                    })?;
                let smoothed = moving_average(&series, bcfg.window)?;
                let b = build_baseline(&smoothed, as_of, &bcfg)?;
                let path = baseline_path(&dir, m);
                save_baseline(&path, &b)?;
                let valid_slots = (0..b.slots().len())
                    .filter(|&i| b.is_valid(netwatch_core::baseline::WeekSlot::from_index(i)))
                    .count();
                Ok(MetricBuild {
                    metric_id: m.clone(),
                    points,
                    invalid_lines: report.invalid,
                    weeks_used: b.weeks_used(),
                    valid_slots,
                    slots: b.slots().len(),
                    path,
                })
            })();
            (m.clone(), res, points)
        })
        .collect();

    let mut built = Vec::new();
    let mut failures = Vec::new();
    let mut points_read = 0;
    for (metric_id, res, points) in results {
        points_read += points;
        match res {
            Ok(b) => built.push(b),
            Err(e) => failures.push(BaselineFailure {
                metric_id,
                error: e.to_string(),
            }),
        }
    }
    let elapsed_secs = clock.secs();
    Ok(BaselineReport {
        as_of,
        metrics_processed: metrics.len(),
        points_read,
        built,
        failures,
        elapsed_secs,
        points_per_sec: rate(points_read, elapsed_secs),
    })
}
