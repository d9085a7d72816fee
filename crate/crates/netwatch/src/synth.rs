//! Deterministic synthetic workloads.
//!
//! Metric values follow `base * scale(metric) * daily(t) * weekend(t)`,
//! multiplied by a per-(week, day) level jitter and per-sample noise.
//! Injected windows replace the signal with the clean profile times a
//! multiplier; their ground truth goes to a labels sidecar.

use std::f64::consts::TAU;
use std::net::Ipv4Addr;

use netwatch_core::geo::{AccessRecord, CountryCode, GeoEntry, GeoIpTable};
use netwatch_core::time::{weekday, SECS_PER_DAY, SECS_PER_HOUR, SECS_PER_MINUTE, SECS_PER_WEEK};
use netwatch_core::{Duration, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{parse_timestamp, MetricRecord};

/// 2024-01-01 00:00 UTC, a Monday.
pub const DEFAULT_START: Timestamp = 1_704_067_200;

fn timestamp_de<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Timestamp, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Epoch(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Epoch(t) => Ok(t),
        Raw::Text(s) => parse_timestamp(&s).map_err(serde::de::Error::custom),
    }
}

/// Anomaly window on one metric (or every metric when `metric` is unset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(deserialize_with = "timestamp_de")]
    pub start: Timestamp,
    pub duration_min: i64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub weeks: u32,
    /// First sample; generation covers `weeks` whole weeks from here.
    #[serde(deserialize_with = "timestamp_de")]
    pub start: Timestamp,
    pub resolution_secs: i64,
    pub metrics: usize,
    pub metric_prefix: String,
    pub base: f64,
    /// Relative swing of the daily cycle, in `[0, 1)`.
    pub daily_amplitude: f64,
    /// Hour of day at which the daily cycle peaks.
    pub daily_peak_hour: f64,
    /// Weekend level relative to weekdays, in `(0, 1]`.
    pub weekend_damping: f64,
    /// Relative standard deviation of per-sample noise.
    pub noise: f64,
    /// Relative standard deviation of the per-(week, day) level.
    pub weekly_jitter: f64,
    pub injections: Vec<Injection>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 1,
            weeks: 9,
            start: DEFAULT_START,
            resolution_secs: 60,
            metrics: 4,
            metric_prefix: "metric".into(),
            base: 1000.0,
            daily_amplitude: 0.6,
            daily_peak_hour: 14.0,
            weekend_damping: 0.5,
            noise: 0.02,
            weekly_jitter: 0.1,
            injections: Vec::new(),
        }
    }
}

/// Ground truth for one injected anomaly; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Label {
    Metric {
        metric_id: String,
        start: Timestamp,
        end: Timestamp,
        multiplier: f64,
    },
    Geo {
        country: String,
        start: Timestamp,
        end: Timestamp,
        ips: Vec<Ipv4Addr>,
    },
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.weeks == 0 {
            return bad("weeks must be at least 1");
        }
        if self.resolution_secs <= 0 || SECS_PER_DAY % self.resolution_secs != 0 {
            return bad("resolution_secs must divide a day");
        }
        if self.start % self.resolution_secs != 0 {
            return bad("start must be aligned to the resolution");
        }
        if !(self.base.is_finite() && self.base > 0.0) {
            return bad("base must be positive");
        }
        if !(0.0..1.0).contains(&self.daily_amplitude) {
            return bad("daily_amplitude must be in [0, 1)");
        }
        if !(self.weekend_damping > 0.0 && self.weekend_damping <= 1.0) {
            return bad("weekend_damping must be in (0, 1]");
        }
        if !(self.noise >= 0.0 && self.weekly_jitter >= 0.0) {
            return bad("noise and weekly_jitter must be non-negative");
        }
        for inj in &self.injections {
            if inj.duration_min <= 0 || !(inj.multiplier.is_finite() && inj.multiplier >= 0.0) {
                return bad("injections need a positive duration and a non-negative multiplier");
            }
            if let Some(m) = &inj.metric {
                if !self.metric_ids().contains(m) {
                    return bad(&format!("injection targets unknown metric {m:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> Duration {
        Duration::from_secs(self.resolution_secs)
    }

    pub fn end(&self) -> Timestamp {
        self.start + self.weeks as i64 * SECS_PER_WEEK
    }

    pub fn metric_ids(&self) -> Vec<String> {
        (0..self.metrics)
            .map(|i| format!("{}_{i:03}", self.metric_prefix))
            .collect()
    }

    fn scale(&self, metric: usize) -> f64 {
        1.0 + 0.25 * (metric % 7) as f64
    }

    /// Noise-free value of `metric` at `ts`.
    pub fn profile(&self, metric: usize, ts: Timestamp) -> f64 {
        let hour = ts.rem_euclid(SECS_PER_DAY) as f64 / SECS_PER_HOUR as f64;
        let daily = 1.0 + self.daily_amplitude * (TAU * (hour - self.daily_peak_hour) / 24.0).cos();
        let weekend = if weekday(ts) >= 5 { self.weekend_damping } else { 1.0 };
        self.base * self.scale(metric) * daily * weekend
    }

    fn injection_at(&self, metric_id: &str, ts: Timestamp) -> Option<f64> {
        self.injections
            .iter()
            .find(|i| {
                i.metric.as_deref().is_none_or(|m| m == metric_id)
                    && i.start <= ts
                    && ts < i.start + i.duration_min * SECS_PER_MINUTE
            })
            .map(|i| i.multiplier)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Every sample of metric `index`, ascending.
    pub fn generate_metric(&self, index: usize) -> Vec<(Timestamp, f64)> {
        let id = format!("{}_{index:03}", self.metric_prefix);
        let mut rng = self.rng(index as u64 + 1);
        let days = self.weeks as usize * 7;
        let jitter = Normal::new(1.0, self.weekly_jitter).expect("finite jitter");
        let levels: Vec<f64> = (0..days).map(|_| jitter.sample(&mut rng).max(0.1)).collect();
        let noise = Normal::new(0.0, self.noise).expect("finite noise");
        let step = self.resolution_secs;
        let n = ((self.end() - self.start) / step) as usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let ts = self.start + i as i64 * step;
            let clean = self.profile(index, ts);
            let eps = noise.sample(&mut rng);
            let v = match self.injection_at(&id, ts) {
                Some(mult) => clean * mult,
                None => {
                    let day = ((ts - self.start) / SECS_PER_DAY) as usize;
                    (clean * levels[day] * (1.0 + eps)).max(0.0)
                }
            };
            // Two decimals keep files compact and round-trip exactly through text.
            out.push((ts, (v * 100.0).round() / 100.0));
        }
        out
    }

    pub fn generate_records(&self, index: usize) -> Vec<MetricRecord> {
        let id = format!("{}_{index:03}", self.metric_prefix);
        self.generate_metric(index)
            .into_iter()
            .map(|(timestamp, value)| MetricRecord {
                timestamp,
                metric_id: id.clone(),
                value,
                tags: Default::default(),
            })
            .collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        let ids = self.metric_ids();
        let mut out = Vec::new();
        for inj in &self.injections {
            let end = inj.start + inj.duration_min * SECS_PER_MINUTE;
            for id in &ids {
                if inj.metric.as_deref().is_none_or(|m| m == id) {
                    out.push(Label::Metric {
                        metric_id: id.clone(),
                        start: inj.start,
                        end,
                        multiplier: inj.multiplier,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryMix {
    pub code: String,
    pub name: String,
    /// Share of background traffic; 0 for countries that only appear in
    /// the table.
    pub weight: f64,
}

fn mix(code: &str, name: &str, weight: f64) -> CountryMix {
    CountryMix {
        code: code.into(),
        name: name.into(),
        weight,
    }
}

/// Burst from a handful of addresses of one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoInjection {
    pub country: String,
    #[serde(deserialize_with = "timestamp_de")]
    pub start: Timestamp,
    pub duration_min: i64,
    pub ips: usize,
    pub per_minute: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccessSpec {
    pub seed: u64,
    #[serde(deserialize_with = "timestamp_de")]
    pub start: Timestamp,
    pub span_min: i64,
    pub records: usize,
    pub distinct_ips: usize,
    pub table_ranges: usize,
    pub countries: Vec<CountryMix>,
    pub injections: Vec<GeoInjection>,
}

impl Default for AccessSpec {
    fn default() -> Self {
        AccessSpec {
            seed: 7,
            start: DEFAULT_START,
            span_min: 7 * 24 * 60,
            records: 400_000,
            distinct_ips: 150_000,
            table_ranges: 1200,
            countries: vec![
                mix("ES", "Spain", 0.55),
                mix("US", "United States", 0.12),
                mix("FR", "France", 0.08),
                mix("DE", "Germany", 0.07),
                mix("GB", "United Kingdom", 0.06),
                mix("IT", "Italy", 0.05),
                mix("PT", "Portugal", 0.04),
                mix("NL", "Netherlands", 0.03),
                mix("BY", "Belarus", 0.0),
                mix("KP", "North Korea", 0.0),
                mix("MN", "Mongolia", 0.0),
                mix("BO", "Bolivia", 0.0),
            ],
            injections: Vec::new(),
        }
    }
}

/// Synthetic geo table plus access records.
#[derive(Debug, Clone)]
pub struct AccessWorkload {
    pub table: GeoIpTable,
    pub records: Vec<AccessRecord>,
    pub labels: Vec<Label>,
}

impl AccessSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("access synth: {m}")));
        if self.countries.is_empty() || self.table_ranges < self.countries.len() {
            return bad("need at least one table range per country");
        }
        if self.span_min <= 0 {
            return bad("span_min must be positive");
        }
        if !self.countries.iter().any(|c| c.weight > 0.0) && self.records > 0 {
            return bad("no country has a positive weight");
        }
        for c in &self.countries {
            CountryCode::new(&c.code).map_err(|e| Error::Config(e.to_string()))?;
        }
        for inj in &self.injections {
            if !self.countries.iter().any(|c| c.code.eq_ignore_ascii_case(&inj.country)) {
                return bad(&format!("injection country {} is not in the table", inj.country));
            }
        }
        Ok(())
    }

    /// Ranges are dealt round-robin to countries; range `i` starts at
    /// `1.0.0.0 + i * 2^18` and spans 256..=65536 addresses.
    pub fn table(&self) -> GeoIpTable {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let entries = (0..self.table_ranges)
            .map(|i| {
                let c = &self.countries[i % self.countries.len()];
                let start = (1u32 << 24) + (i as u32) * (1 << 18);
                let size: u32 = rng.random_range(256..=65_536);
                GeoEntry {
                    start,
                    end: start + size - 1,
                    country: CountryCode::new(&c.code).expect("validated code"),
                    country_name: c.name.clone(),
                }
            })
            .collect();
        GeoIpTable::new(entries).expect("generated ranges are disjoint")
    }

    fn random_ip(table: &GeoIpTable, country: CountryCode, rng: &mut ChaCha8Rng) -> u32 {
        let ranges: Vec<&GeoEntry> = table.entries().iter().filter(|e| e.country == country).collect();
        let r = ranges[rng.random_range(0..ranges.len())];
        rng.random_range(r.start..=r.end)
    }

    pub fn generate(&self) -> Result<AccessWorkload> {
        self.validate()?;
        let table = self.table();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2);
        let total: f64 = self.countries.iter().map(|c| c.weight).sum();
        let pools: Vec<(f64, Vec<u32>)> = self
            .countries
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| {
                let cc = CountryCode::new(&c.code).expect("validated code");
                let n = ((self.distinct_ips as f64 * c.weight / total).ceil() as usize).max(1);
                let pool = (0..n).map(|_| Self::random_ip(&table, cc, &mut rng)).collect();
                (c.weight / total, pool)
            })
            .collect();

        let span = self.span_min * SECS_PER_MINUTE;
        let mut records = Vec::with_capacity(self.records);
        for _ in 0..self.records {
            let mut u: f64 = rng.random();
            let pool = pools
                .iter()
                .find(|(w, _)| {
                    u -= w;
                    u < 0.0
                })
                .unwrap_or(&pools[pools.len() - 1]);
            // Skewed popularity: a few addresses dominate.
            let pick = (pool.1.len() as f64 * rng.random::<f64>().powi(3)) as usize;
            records.push(AccessRecord {
                timestamp: self.start + rng.random_range(0..span),
                client_ip: Ipv4Addr::from(pool.1[pick.min(pool.1.len() - 1)]),
                service: "web".into(),
                request_count: rng.random_range(1..=3),
            });
        }

        let mut labels = Vec::new();
        for inj in &self.injections {
            let cc = CountryCode::new(&inj.country).map_err(|e| Error::Config(e.to_string()))?;
            let ips: Vec<u32> = (0..inj.ips).map(|_| Self::random_ip(&table, cc, &mut rng)).collect();
            for m in 0..inj.duration_min {
                for &ip in &ips {
                    records.push(AccessRecord {
                        timestamp: inj.start + m * SECS_PER_MINUTE + rng.random_range(0..SECS_PER_MINUTE),
                        client_ip: Ipv4Addr::from(ip),
                        service: "web".into(),
                        request_count: inj.per_minute,
                    });
                }
            }
            labels.push(Label::Geo {
                country: cc.to_string(),
                start: inj.start,
                end: inj.start + inj.duration_min * SECS_PER_MINUTE,
                ips: ips.into_iter().map(Ipv4Addr::from).collect(),
            });
        }
        records.sort_by_key(|r| r.timestamp);
        Ok(AccessWorkload {
            table,
            records,
            labels,
        })
    }
}
