//! Partitioned historical store: `<root>/<metric_id>/<YYYY-MM-DD>.csv`,
//! each file holding that metric's CSV records of one UTC day.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use netwatch_core::time::SECS_PER_DAY;
use netwatch_core::Timestamp;

use super::{is_valid_metric_id, InputFormat, MetricParser, MetricRecord, ParseReport};
use crate::error::{Error, Result};
use crate::fsutil::append_lines;

/// UTC day containing `ts`, as midnight epoch seconds.
pub fn day_of(ts: Timestamp) -> Timestamp {
    ts.div_euclid(SECS_PER_DAY) * SECS_PER_DAY
}

fn day_name(day: Timestamp) -> String {
    DateTime::from_timestamp(day, 0)
        .expect("day within chrono range")
        .format("%Y-%m-%d.csv")
        .to_string()
}

fn parse_day_name(name: &str) -> Option<Timestamp> {
    let stem = name.strip_suffix(".csv")?;
    let d = NaiveDate::parse_from_str(stem, "%Y-%m-%d").ok()?;
    Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp())
}

/// Unordered `(ts, value)` points as stored.
pub type RawPoints = Vec<(Timestamp, f64)>;

#[derive(Debug, Clone)]
pub struct HistoryStore {
    root: PathBuf,
}

impl HistoryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        HistoryStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn partition_path(&self, metric_id: &str, ts: Timestamp) -> PathBuf {
        self.root.join(metric_id).join(day_name(day_of(ts)))
    }

    /// Append records to their day partitions.
    pub fn append(&self, records: &[MetricRecord]) -> Result<usize> {
        let mut groups: BTreeMap<(&str, Timestamp), Vec<String>> = BTreeMap::new();
        for r in records {
            r.validate()
                .map_err(|reason| Error::Config(format!("refusing to store record: {reason}")))?;
            groups
                .entry((&r.metric_id, day_of(r.timestamp)))
                .or_default()
                .push(r.to_csv_line());
        }
        let mut n = 0;
        for ((metric, day), lines) in groups {
            n += append_lines(&self.partition_path(metric, day), lines)?;
        }
        Ok(n)
    }

    /// Metric directories present, sorted.
    pub fn metrics(&self) -> Result<Vec<String>> {
        if !self.root.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))? {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().is_dir() && is_valid_metric_id(&name) {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Day partitions of `metric_id`, ascending.
    pub fn days(&self, metric_id: &str) -> Result<Vec<Timestamp>> {
        let dir = self.root.join(metric_id);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut days = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if let Some(d) = parse_day_name(&entry.file_name().to_string_lossy()) {
                days.push(d);
            }
        }
        days.sort_unstable();
        Ok(days)
    }

    /// Raw `(ts, value)` points of `metric_id` with `from <= ts < to`.
    ///
    /// Records of another metric found in the partition count as invalid
    /// lines. Returns `None` when the metric has no directory.
    pub fn read_range(
        &self,
        metric_id: &str,
        from: Timestamp,
        to: Timestamp,
    ) -> Result<Option<(RawPoints, ParseReport)>> {
        if !self.root.join(metric_id).is_dir() {
            return Ok(None);
        }
        let mut points = Vec::new();
        let mut report = ParseReport::default();
        if from >= to {
            return Ok(Some((points, report)));
        }
        let mut day = day_of(from);
        while day < to {
            let path = self.partition_path(metric_id, day);
            day += SECS_PER_DAY;
            let file = match File::open(&path) {
                Ok(f) => f,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(Error::io(path, e)),
            };
            let mut parser = MetricParser::new(BufReader::new(file), InputFormat::Csv);
            let mut foreign = Vec::new();
            while let Some(r) = parser.next() {
                if r.metric_id != metric_id {
                    foreign.push(parser.report().lines);
                } else if from <= r.timestamp && r.timestamp < to {
                    points.push((r.timestamp, r.value));
                }
            }
            let mut rep = parser.finish().map_err(|e| Error::io(&path, e))?;
            for line in foreign {
                rep.records -= 1;
                rep.reject(line, format!("record of another metric in {}", path.display()));
            }
            report.merge(rep);
        }
        Ok(Some((points, report)))
    }
}
