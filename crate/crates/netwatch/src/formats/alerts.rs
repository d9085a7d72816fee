//! Alert sinks: one JSON object per line, appended.

use std::net::Ipv4Addr;
use std::path::Path;

use netwatch_core::detect::Alert;
use netwatch_core::geo::GeoAlert;
use netwatch_core::Timestamp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{append_lines, read_to_string};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub rule_id: String,
    pub metric_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub open: bool,
    pub peak_value: f64,
    pub threshold_at_peak: f64,
    pub severity: String,
    pub first_notified_at: Timestamp,
    pub notified_at: Timestamp,
    pub notify_count: u32,
}

impl From<&Alert> for AlertRecord {
    fn from(a: &Alert) -> Self {
        AlertRecord {
            rule_id: a.rule_id.clone(),
            metric_id: a.metric_id.clone(),
            start: a.start,
            end: a.end,
            open: a.open,
            peak_value: a.peak_value,
            threshold_at_peak: a.threshold_at_peak,
            severity: a.severity.as_str().into(),
            first_notified_at: a.first_notified_at,
            notified_at: a.notified_at,
            notify_count: a.notify_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpCount {
    pub ip: Ipv4Addr,
    pub count: u64,
}

impl IpCount {
    pub fn list(ips: &[(u32, u64)]) -> Vec<IpCount> {
        ips.iter()
            .map(|&(ip, count)| IpCount {
                ip: Ipv4Addr::from(ip),
                count,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoAlertRecord {
    pub country: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub duration_min: i64,
    pub peak_rate: u64,
    pub model_threshold: f64,
    pub contributing_ips: Vec<IpCount>,
    pub detected_at: Timestamp,
}

impl GeoAlertRecord {
    pub fn new(a: &GeoAlert, detected_at: Timestamp) -> Self {
        GeoAlertRecord {
            country: a.country.to_string(),
            start: a.start,
            end: a.end,
            duration_min: a.duration().as_mins(),
            peak_rate: a.peak_rate,
            model_threshold: a.model_threshold,
            contributing_ips: IpCount::list(&a.contributing_ips),
            detected_at,
        }
    }
}

pub fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<usize> {
    append_lines(
        path,
        items
            .iter()
            .map(|i| serde_json::to_string(i).expect("record serializes")),
    )
}

/// Every line of a JSON-lines file, in order. A missing file is empty.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i + 1, e.to_string())))
        .collect()
}
