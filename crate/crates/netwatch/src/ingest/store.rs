//! In-memory store of the most recent samples per metric.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use netwatch_core::detect::SeriesSource;
use netwatch_core::series::{regularize, Aggregation, GapPolicy, MetricSeries};
use netwatch_core::time::align_down;
use netwatch_core::{Duration, Timestamp};
use parking_lot::RwLock;

use super::{InputFormat, MetricParser, MetricRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct IngestSummary {
    pub accepted: u64,
    /// Older than the horizon on arrival.
    pub dropped: u64,
}

/// Raw values of the last `horizon` of every metric, bucketed by
/// resolution.
///
/// Bucket values are kept individually and combined only when a series is
/// read, so the contents never depend on arrival order. A bucket survives
/// while `newest - bucket < horizon`, where `newest` is the newest bucket
/// across all metrics.
#[derive(Debug)]
pub struct RecentStore {
    horizon: Duration,
    resolution: Duration,
    aggregation: Aggregation,
    overrides: HashMap<String, Aggregation>,
    metrics: HashMap<String, BTreeMap<Timestamp, Vec<f64>>>,
    newest: Option<Timestamp>,
    dropped: u64,
    evicted: u64,
    spill: Option<(PathBuf, BufWriter<File>)>,
}

impl RecentStore {
    pub fn new(horizon: Duration, resolution: Duration) -> Self {
        assert!(resolution.is_positive(), "resolution must be positive");
        assert!(horizon >= resolution, "horizon shorter than one bucket");
        RecentStore {
            horizon,
            resolution,
            aggregation: Aggregation::Sum,
            overrides: HashMap::new(),
            metrics: HashMap::new(),
            newest: None,
            dropped: 0,
            evicted: 0,
            spill: None,
        }
    }

    /// Bucket combination for metrics without an override.
    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn set_aggregation(&mut self, metric_id: &str, aggregation: Aggregation) {
        self.overrides.insert(metric_id.to_string(), aggregation);
    }

    pub fn horizon(&self) -> Duration {
        self.horizon
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn newest(&self) -> Option<Timestamp> {
        self.newest
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn evicted(&self) -> u64 {
        self.evicted
    }

    fn cutoff(&self) -> Option<Timestamp> {
        self.newest.map(|n| n - self.horizon.as_secs())
    }

    /// Add one record. Returns `false` if it was already outside the horizon.
    pub fn insert(&mut self, record: &MetricRecord) -> bool {
        if self.insert_value(&record.metric_id, record.timestamp, record.value) {
            if let Some((_, w)) = self.spill.as_mut() {
                // Spill errors surface at the next `sync_spill`.
                let _ = writeln!(w, "{},{},{}", record.timestamp, record.metric_id, record.value);
            }
            true
        } else {
            false
        }
    }

    fn insert_value(&mut self, metric_id: &str, ts: Timestamp, value: f64) -> bool {
        let bucket = align_down(ts, self.resolution);
        if self.cutoff().is_some_and(|c| bucket <= c) {
            self.dropped += 1;
            return false;
        }
        let buckets = match self.metrics.get_mut(metric_id) {
            Some(b) => b,
            None => self.metrics.entry(metric_id.to_string()).or_default(),
        };
        buckets.entry(bucket).or_default().push(value);
        if self.newest.is_none_or(|n| bucket > n) {
            self.newest = Some(bucket);
            self.maintain();
        }
        true
    }

    pub fn ingest<'a, I>(&mut self, records: I) -> IngestSummary
    where
        I: IntoIterator<Item = &'a MetricRecord>,
    {
        let mut s = IngestSummary::default();
        for r in records {
            if self.insert(r) {
                s.accepted += 1;
            } else {
                s.dropped += 1;
            }
        }
        s
    }

    /// Evict every bucket outside the horizon.
    pub fn maintain(&mut self) {
        let Some(cutoff) = self.cutoff() else { return };
        let mut evicted = 0;
        for buckets in self.metrics.values_mut() {
            while let Some(entry) = buckets.first_entry() {
                if *entry.key() > cutoff {
                    break;
                }
                evicted += entry.remove().len() as u64;
            }
        }
        self.evicted += evicted;
        self.metrics.retain(|_, b| !b.is_empty());
    }

    pub fn metric_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.metrics.keys().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }

    /// Number of raw values held.
    pub fn len(&self) -> usize {
        self.metrics
            .values()
            .flat_map(|b| b.values())
            .map(Vec::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// Oldest bucket still held, if any.
    pub fn oldest(&self) -> Option<Timestamp> {
        self.metrics.values().filter_map(|b| b.keys().next().copied()).min()
    }

    /// Regularized series of one metric; missing buckets stay gaps.
    pub fn series(&self, metric_id: &str) -> Option<MetricSeries> {
        let buckets = self.metrics.get(metric_id)?;
        let agg = self
            .overrides
            .get(metric_id)
            .copied()
            .unwrap_or(self.aggregation);
        let raw = buckets
            .iter()
            .flat_map(|(&ts, vs)| vs.iter().map(move |&v| (ts, v)));
        regularize(metric_id, raw, self.resolution, GapPolicy::LeaveGap, agg).ok()
    }

    pub fn snapshot(&self) -> StoreSnapshot {
        let series = self
            .metrics
            .keys()
            .filter_map(|m| Some((m.clone(), self.series(m)?)))
            .collect();
        StoreSnapshot { series }
    }

    /// Append every accepted record to `path` and reload what it already holds.
    pub fn attach_spill(&mut self, path: &Path) -> Result<IngestSummary> {
        let mut summary = IngestSummary::default();
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut parser = MetricParser::new(BufReader::new(f), InputFormat::Csv);
            for r in parser.by_ref() {
                if self.insert_value(&r.metric_id, r.timestamp, r.value) {
                    summary.accepted += 1;
                } else {
                    summary.dropped += 1;
                }
            }
            parser.finish().map_err(|e| Error::io(path, e))?;
        }
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        self.spill = Some((path.to_path_buf(), BufWriter::new(f)));
        Ok(summary)
    }

    pub fn sync_spill(&mut self) -> Result<()> {
        if let Some((path, w)) = self.spill.as_mut() {
            w.flush().map_err(|e| Error::io(path.as_path(), e))?;
            w.get_ref().sync_data().map_err(|e| Error::io(path.as_path(), e))?;
        }
        Ok(())
    }

    /// Atomically rewrite the spill file with only the values still held.
    pub fn compact_spill(&mut self) -> Result<()> {
        let Some((path, w)) = self.spill.take() else { return Ok(()) };
        drop(w);
        let mut ids: Vec<&String> = self.metrics.keys().collect();
        ids.sort();
        crate::fsutil::atomic_write(&path, |out| {
            for id in ids {
                for (ts, vs) in &self.metrics[id] {
                    for v in vs {
                        writeln!(out, "{ts},{id},{v}")?;
                    }
                }
            }
            Ok(())
        })?;
        let f = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        self.spill = Some((path, BufWriter::new(f)));
        Ok(())
    }
}

/// Point-in-time copy of a store's series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreSnapshot {
    pub series: BTreeMap<String, MetricSeries>,
}

impl SeriesSource for StoreSnapshot {
    fn series(&self, metric: &str, from: Timestamp, to: Timestamp) -> Option<MetricSeries> {
        self.series.series(metric, from, to)
    }
}

/// Single-writer, many-reader handle to a [`RecentStore`].
#[derive(Debug, Clone)]
pub struct SharedStore(Arc<RwLock<RecentStore>>);

impl SharedStore {
    pub fn new(store: RecentStore) -> Self {
        SharedStore(Arc::new(RwLock::new(store)))
    }

    pub fn ingest(&self, records: &[MetricRecord]) -> IngestSummary {
        self.0.write().ingest(records)
    }

    /// Consistent view: no ingest runs while it is taken.
    pub fn snapshot(&self) -> StoreSnapshot {
        self.0.read().snapshot()
    }

    pub fn with<T>(&self, f: impl FnOnce(&RecentStore) -> T) -> T {
        f(&self.0.read())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ts: i64, m: &str, v: f64) -> MetricRecord {
        MetricRecord {
            timestamp: ts,
            metric_id: m.into(),
            value: v,
            tags: Default::default(),
        }
    }

    fn store() -> RecentStore {
        RecentStore::new(Duration::from_mins(60), Duration::from_mins(1))
    }

    #[test]
    fn same_minute_values_are_summed() {
        let mut s = store();
        s.ingest(&[rec(600, "a", 2.0), rec(630, "a", 3.0), rec(600, "b", 7.0)]);
        let a = s.series("a").unwrap();
        assert_eq!(a.points().len(), 1);
        assert_eq!(a.value_at(600), Some(5.0));
        assert_eq!(s.series("b").unwrap().value_at(600), Some(7.0));
    }

    #[test]
    fn gauges_average_when_configured() {
        let mut s = store();
        s.set_aggregation("cpu", Aggregation::Mean);
        s.ingest(&[rec(600, "cpu", 2.0), rec(610, "cpu", 4.0)]);
        assert_eq!(s.series("cpu").unwrap().value_at(600), Some(3.0));
    }

    #[test]
    fn old_records_are_dropped_and_counted() {
        let mut s = store();
        let sum = s.ingest(&[rec(7200, "a", 1.0), rec(7200 - 3600, "a", 1.0), rec(7200 - 3540, "a", 1.0)]);
        assert_eq!(sum, IngestSummary { accepted: 2, dropped: 1 });
        assert_eq!(s.oldest(), Some(7200 - 3540));
        // Newest 7260 puts bucket 3660 exactly on the cutoff.
        s.ingest(&[rec(7200 + 60, "a", 1.0)]);
        assert_eq!(s.evicted(), 1);
        assert_eq!(s.oldest(), Some(7200));
    }

    #[test]
    fn spill_file_restores_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spill.csv");
        let mut s = store();
        s.attach_spill(&path).unwrap();
        s.ingest(&[rec(600, "a", 1.5), rec(660, "a", 2.5)]);
        s.sync_spill().unwrap();
        s.compact_spill().unwrap();
        let mut t = store();
        let got = t.attach_spill(&path).unwrap();
        assert_eq!(got.accepted, 2);
        assert_eq!(t.snapshot(), s.snapshot());
    }
}
