use std::io::Write;

use netwatch_core::time::{SECS_PER_HOUR, SECS_PER_MINUTE, SECS_PER_WEEK};
use netwatch_core::Duration;
use serde::Serialize;
use serde_json::Value;

use super::synth::default_rules;
use super::{cmd_baseline, cmd_detect, cmd_geo_report, cmd_synth, rate, tagged, Stopwatch};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::rules::rules_to_toml;
use crate::fsutil::atomic_write;
use crate::ingest::{InputFormat, MetricParser, RecentStore};
use crate::synth::{AccessSpec, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRun {
    pub parse_records_per_sec: f64,
    pub baseline_points_per_sec: f64,
    pub detect_elements_per_sec: f64,
    pub geo_records_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchStat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `(max - min) / mean`.
    pub spread: f64,
}

impl BenchStat {
    fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        BenchStat {
            mean,
            min,
            max,
            spread: if mean > 0.0 { (max - min) / mean } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub parse_records: usize,
    pub baseline_points: usize,
    pub detect_rules: usize,
    pub detect_elements: usize,
    pub geo_records: usize,
    pub runs: Vec<BenchRun>,
    pub parse: BenchStat,
    pub baseline: BenchStat,
    pub detect: BenchStat,
    pub geo: BenchStat,
    /// Every rate's spread across runs is under 20%.
    pub stable: bool,
}

impl BenchReport {
    pub fn lines(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.runs.iter().map(|r| tagged("run", "bench", r)).collect();
        let mut summary = self.clone();
        summary.runs.clear();
        out.push(tagged("summary", "bench", &summary));
        out
    }
}

fn metric_csv(n: usize, metrics: usize) -> Vec<u8> {
    let mut buf = Vec::with_capacity(n * 32);
    let t0 = crate::synth::DEFAULT_START;
    for i in 0..n {
        let _ = writeln!(buf, "{},bench_{:02},{}.5", t0 + (i / metrics) as i64, i % metrics, i % 997);
    }
    buf
}

/// Throughput of parsing, baseline building, detection and the geo
/// report on a generated workload, repeated `bench.repeats` times.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let b = &cfg.bench;
    if b.repeats == 0 {
        return Err(Error::Config("bench.repeats must be at least 1".into()));
    }
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let weeks = cfg.baseline.weeks_back;
    let mut work = RunConfig::with_root(dir.path());
    work.baseline = cfg.baseline.clone();
    work.detect = cfg.detect.clone();
    work.geo = cfg.geo.clone();
    work.synth = SyntheticSpec {
        weeks: weeks + 1,
        metrics: b.baseline_metrics.max(1),
        resolution_secs: cfg.baseline.resolution_secs,
        ..Default::default()
    };
    work.access = Some(AccessSpec {
        records: b.access_records,
        ..Default::default()
    });
    cmd_synth(&work)?;
    let ids = work.synth.metric_ids();
    let mut rules = Vec::with_capacity(b.rules);
    for i in 0..b.rules {
        let mut r = default_rules(&work, &ids[i % ids.len()..=i % ids.len()]).remove(0);
        r.rule_id = format!("bench_rule_{i:04}");
        rules.push(r);
    }
    let text = rules_to_toml(&rules);
    atomic_write(&work.rules_file(), |w| w.write_all(text.as_bytes()))?;

    let as_of = work.synth.start + weeks as i64 * SECS_PER_WEEK;
    let now = as_of + 12 * SECS_PER_HOUR;
    let access = work.access.as_ref().expect("set above");
    let (geo_from, geo_to) = (access.start, access.start + access.span_min * SECS_PER_MINUTE);
    let input = metric_csv(b.parse_records, 10);

    let mut runs = Vec::with_capacity(b.repeats);
    let (mut baseline_points, mut detect_elements) = (0, 0);
    for _ in 0..b.repeats {
        let clock = Stopwatch::start();
        let mut store = RecentStore::new(Duration::from_mins(60), Duration::from_mins(1));
        let mut parser = MetricParser::new(input.as_slice(), InputFormat::Csv);
        for r in parser.by_ref() {
            store.insert(&r);
        }
        let parsed = parser.report().records;
        let parse_rate = rate(parsed, clock.secs());

        let base = cmd_baseline(&work, as_of)?;
        baseline_points = base.points_read;
        let det = cmd_detect(&work, now)?;
        detect_elements = det.elements;
        let geo = cmd_geo_report(&work, geo_from, geo_to)?;
        runs.push(BenchRun {
            parse_records_per_sec: parse_rate,
            baseline_points_per_sec: base.points_per_sec,
            detect_elements_per_sec: det.elements_per_sec,
            geo_records_per_sec: geo.records_per_sec,
        });
    }

    let stat = |f: fn(&BenchRun) -> f64| BenchStat::of(&runs.iter().map(f).collect::<Vec<_>>());
    let parse = stat(|r| r.parse_records_per_sec);
    let baseline = stat(|r| r.baseline_points_per_sec);
    let detect = stat(|r| r.detect_elements_per_sec);
    let geo = stat(|r| r.geo_records_per_sec);
    let stable = [parse, baseline, detect, geo].iter().all(|s| s.spread < 0.2);
    Ok(BenchReport {
        parse_records: b.parse_records,
        baseline_points,
        detect_rules: b.rules,
        detect_elements,
        geo_records: b.access_records,
        runs,
        parse,
        baseline,
        detect,
        geo,
        stable,
    })
}
