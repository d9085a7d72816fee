
use netwatch_core::detect::{Comparison, DetectionRule, Predicate, Reference};
use netwatch_core::Duration;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::{tagged, Stopwatch};
use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::geo::{access_record_csv, write_geo_table};
use crate::formats::rules::rules_to_toml;
use crate::fsutil::atomic_write;
use crate::ingest::{day_of, HistoryStore};
use crate::synth::Label;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthReport {
    pub metrics: usize,
    pub points: usize,
    pub partitions: usize,
    pub labels: usize,
    pub access_records: usize,
    pub rules_written: bool,
    pub elapsed_secs: f64,
}

impl SynthReport {
    pub fn lines(&self) -> Vec<Value> {
        vec![tagged("summary", "synth", self)]
    }
}

/// One baseline rule per metric, smoothed with the baseline window.
pub fn default_rules(cfg: &RunConfig, metric_ids: &[String]) -> Vec<DetectionRule> {
    metric_ids
        .iter()
        .map(|m| {
            let mut r = DetectionRule::new(
                format!("{m}_above_baseline"),
                m.as_str(),
                Predicate::leaf(m.as_str(), Comparison::Gt, Reference::BaselineUpper),
            );
            r.grace = Duration::from_mins(cfg.detect.grace_min);
            r.lookback = Duration::from_mins(cfg.detect.lookback_min);
            r.renotify_after = Duration::from_mins(cfg.detect.renotify_min);
            r.smoothing = Some(Duration::from_mins(cfg.baseline.window_min));
            r
        })
        .collect()
}

/// Write the synthetic workload: metric partitions, the labels sidecar,
/// optionally access records with their geo table, and a starter rules
/// file when none exists. Output is byte-identical for a fixed seed.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthReport> {
    let clock = Stopwatch::start();
    let spec = &cfg.synth;
    spec.validate()?;
    let history = HistoryStore::new(cfg.history_dir());

    let counts: Vec<(usize, usize)> = (0..spec.metrics)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let records = spec.generate_records(i);
            let mut parts = 0;
            for day in records.chunk_by(|a, b| day_of(a.timestamp) == day_of(b.timestamp)) {
                let path = history.partition_path(&day[0].metric_id, day[0].timestamp);
                atomic_write(&path, |w| {
                    for r in day {
                        writeln!(w, "{}", r.to_csv_line())?;
                    }
                    Ok(())
                })?;
                parts += 1;
            }
            Ok((records.len(), parts))
        })
        .collect::<Result<_>>()?;

    let mut labels = spec.labels();
    let mut access_records = 0;
    if let Some(access) = &cfg.access {
        let w = access.generate()?;
        write_geo_table(&cfg.geo_table(), &w.table)?;
        let access_path = cfg.access_path();
        let file = if access_path.extension().is_some() {
            access_path
        } else {
            access_path.join("access.csv")
        };
        atomic_write(&file, |out| {
            writeln!(out, "timestamp,client_ip,service,request_count")?;
            for r in &w.records {
                writeln!(out, "{}", access_record_csv(r))?;
            }
            Ok(())
        })?;
        access_records = w.records.len();
        labels.extend(w.labels);
    }
    atomic_write(&cfg.labels_file(), |w| {
        for l in &labels {
            writeln!(w, "{}", serde_json::to_string::<Label>(l).expect("label serializes"))?;
        }
        Ok(())
    })?;

    let rules_path = cfg.rules_file();
    let rules_written = !rules_path.exists();
    if rules_written {
        let text = rules_to_toml(&default_rules(cfg, &spec.metric_ids()));
        atomic_write(&rules_path, |w| w.write_all(text.as_bytes()))?;
    }

    Ok(SynthReport {
        metrics: spec.metrics,
        points: counts.iter().map(|c| c.0).sum(),
        partitions: counts.iter().map(|c| c.1).sum(),
        labels: labels.len(),
        access_records,
        rules_written,
        elapsed_secs: clock.secs(),
    })
}
