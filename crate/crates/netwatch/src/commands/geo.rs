use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use netwatch_core::geo::{
    build_country_model, detect_anomalous_visits, map_records, top_k_ips, AccessRecord, Ccdf,
    GeoIpTable, TimeRange, VisitAggregates, Whitelist,
};
use netwatch_core::time::{align_down, SECS_PER_DAY, SECS_PER_MINUTE};
use netwatch_core::{Duration, Timestamp};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::{rate, tagged, Stopwatch};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::alerts::{append_jsonl, GeoAlertRecord};
use crate::formats::geo::{
    load_geo_table, load_whitelist, read_access_records, write_ccdf, write_map_export,
    write_top_ips, MapSummary,
};
use crate::ingest::{LineError, ParseReport};

const SHARD: usize = 1 << 16;

/// Access-record files under `path` (itself if a file), sorted.
fn access_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("csv" | "jsonl" | "ndjson")
                )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn read_all_access(cfg: &RunConfig) -> Result<(Vec<AccessRecord>, ParseReport)> {
    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for f in access_files(&cfg.access_path())? {
        let (mut r, rep) = read_access_records(&f)?;
        records.append(&mut r);
        report.merge(rep);
    }
    Ok((records, report))
}

fn aggregate(records: &[AccessRecord], table: &GeoIpTable, range: TimeRange, wl: &Whitelist) -> VisitAggregates {
    records
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut agg = VisitAggregates::empty(range);
            for r in chunk {
                agg.add(r, table, wl);
            }
            agg
        })
        .reduce(
            || VisitAggregates::empty(range),
            |mut a, b| {
                a.merge(b);
                a
            },
        )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoReport {
    pub from: Timestamp,
    pub to: Timestamp,
    pub records_parsed: usize,
    pub invalid_lines: usize,
    pub first_errors: Vec<LineError>,
    pub records_in_range: u64,
    pub countries: usize,
    pub distinct_ips: usize,
    pub ranked_ips: usize,
    pub top_k: usize,
    pub export_dir: PathBuf,
    pub elapsed_secs: f64,
    pub records_per_sec: f64,
}

impl GeoReport {
    pub fn lines(&self) -> Vec<Value> {
        vec![tagged("summary", "geo-report", self)]
    }
}

/// Map export over `[from, to)`: per-country totals and tooltip IPs,
/// the global top-K IP list and a per-country CCDF of per-minute counts.
pub fn cmd_geo_report(cfg: &RunConfig, from: Timestamp, to: Timestamp) -> Result<GeoReport> {
    let clock = Stopwatch::start();
    let table = load_geo_table(&cfg.geo_table())?;
    let (records, parse) = read_all_access(cfg)?;
    let from = align_down(from, Duration::from_mins(1));
    let to = align_down(to, Duration::from_mins(1)).max(from);
    let range = TimeRange::new(from, to);
    let agg = aggregate(&records, &table, range, &Whitelist::default());

    let ranked = top_k_ips(agg.per_ip.iter().map(|(&ip, &n)| (ip, n)), cfg.geo.top_k);
    let map = map_records(&agg, &ranked, &table, cfg.geo.tooltip_top);
    let dir = cfg.export_dir();
    let summary = MapSummary {
        from,
        to,
        countries: map.len(),
        total_requests: agg.total_requests,
        distinct_ips: agg.per_ip.len(),
        top_k: cfg.geo.top_k,
        ranked_ips: ranked.len(),
    };
    write_map_export(&dir.join("map.jsonl"), &summary, &map, &table)?;
    write_top_ips(&dir.join("top_ips.csv"), &ranked, &table)?;
    let ccdf_dir = dir.join("ccdf");
    if ccdf_dir.is_dir() {
        // Drop curves of countries absent from this interval.
        for e in fs::read_dir(&ccdf_dir).map_err(|e| Error::io(&ccdf_dir, e))?.flatten() {
            let _ = fs::remove_file(e.path());
        }
    }
    for (cc, series) in &agg.per_country {
        write_ccdf(&ccdf_dir.join(format!("{cc}.csv")), &Ccdf::from_counts(&series.counts))?;
    }

    let elapsed_secs = clock.secs();
    Ok(GeoReport {
        from,
        to,
        records_parsed: parse.records,
        invalid_lines: parse.invalid,
        first_errors: parse.errors.into_iter().take(10).collect(),
        records_in_range: records.len() as u64 - agg.outside_range,
        countries: map.len(),
        distinct_ips: agg.per_ip.len(),
        ranked_ips: ranked.len(),
        top_k: cfg.geo.top_k,
        export_dir: dir,
        elapsed_secs,
        records_per_sec: rate(records.len(), elapsed_secs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoDetectReport {
    pub now: Timestamp,
    pub history_from: Timestamp,
    pub live_from: Timestamp,
    pub records_parsed: usize,
    pub invalid_lines: usize,
    pub whitelisted: u64,
    pub modeled_countries: usize,
    pub alerts: Vec<GeoAlertRecord>,
    pub unmodeled: Vec<String>,
    pub elapsed_secs: f64,
}

impl GeoDetectReport {
    pub fn lines(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.alerts.iter().map(|a| tagged("alert", "geo-detect", a)).collect();
        out.push(tagged(
            "summary",
            "geo-detect",
            &serde_json::json!({
                "now": self.now,
                "history_from": self.history_from,
                "live_from": self.live_from,
                "records_parsed": self.records_parsed,
                "invalid_lines": self.invalid_lines,
                "whitelisted": self.whitelisted,
                "modeled_countries": self.modeled_countries,
                "alerts": self.alerts.len(),
                "unmodeled": self.unmodeled,
                "elapsed_secs": self.elapsed_secs,
            }),
        ));
        out
    }
}

/// Sustained uncommon-origin detection over `[now - live, now)` against
/// models of the preceding `history_days`.
pub fn cmd_geo_detect(cfg: &RunConfig, now: Timestamp) -> Result<GeoDetectReport> {
    let clock = Stopwatch::start();
    cfg.validate()?;
    let table = load_geo_table(&cfg.geo_table())?;
    let wl_path = cfg.whitelist();
    let whitelist = if wl_path.exists() {
        load_whitelist(&wl_path)?
    } else {
        Whitelist::default()
    };
    let (records, parse) = read_all_access(cfg)?;

    let now = align_down(now, Duration::from_mins(1));
    let live_from = now - cfg.geo.live_min * SECS_PER_MINUTE;
    let history_from = live_from - cfg.geo.history_days * SECS_PER_DAY;
    let history = aggregate(&records, &table, TimeRange::new(history_from, live_from), &whitelist);
    let live = aggregate(&records, &table, TimeRange::new(live_from, now), &whitelist);

    let mut models = BTreeMap::new();
    for (cc, series) in &history.per_country {
        models.insert(*cc, build_country_model(series, cfg.geo.quantile)?);
    }
    let detection = detect_anomalous_visits(&live, &models, Duration::from_mins(cfg.geo.sustain_min));
    let alerts: Vec<GeoAlertRecord> = detection
        .alerts
        .iter()
        .map(|a| GeoAlertRecord::new(a, now))
        .collect();
    append_jsonl(&cfg.geo_alerts_file(), &alerts)?;

    Ok(GeoDetectReport {
        now,
        history_from,
        live_from,
        records_parsed: parse.records,
        invalid_lines: parse.invalid,
        whitelisted: history.whitelisted + live.whitelisted,
        modeled_countries: models.len(),
        alerts,
        unmodeled: detection.unmodeled.iter().map(|c| c.to_string()).collect(),
        elapsed_secs: clock.secs(),
    })
}
