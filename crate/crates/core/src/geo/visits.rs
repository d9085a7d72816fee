use core::net::Ipv4Addr;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{top_k_ips, CountryCode, GeoIpTable, Whitelist};
use crate::time::{align_down, Duration, Timestamp, SECS_PER_MINUTE};

/// One web visit (or a pre-aggregated batch of visits from one client).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessRecord {
    pub timestamp: Timestamp,
    pub client_ip: Ipv4Addr,
    pub service: String,
    pub request_count: u32,
}

/// Half-open `[from, to)` interval, minute-aligned on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    from: Timestamp,
    to: Timestamp,
}

impl TimeRange {
    /// `from` is floored and `to` rounded up to whole minutes.
    pub fn new(from: Timestamp, to: Timestamp) -> Self {
        let minute = Duration::from_mins(1);
        let from = align_down(from, minute);
        let to = align_down(to + SECS_PER_MINUTE - 1, minute).max(from);
        TimeRange { from, to }
    }

    pub fn from(&self) -> Timestamp {
        self.from
    }

    pub fn to(&self) -> Timestamp {
        self.to
    }

    pub fn minutes(&self) -> usize {
        ((self.to - self.from) / SECS_PER_MINUTE) as usize
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        self.from <= ts && ts < self.to
    }

    fn minute_index(&self, ts: Timestamp) -> usize {
        ((ts - self.from) / SECS_PER_MINUTE) as usize
    }
}

/// Per-minute request counts of one country over a contiguous grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryMinuteSeries {
    pub country: CountryCode,
    /// Timestamp of the first minute.
    pub start: Timestamp,
    pub counts: Vec<u64>,
}

impl CountryMinuteSeries {
    pub fn zeros(country: CountryCode, range: TimeRange) -> Self {
        CountryMinuteSeries {
            country,
            start: range.from(),
            counts: alloc::vec![0; range.minutes()],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn minute_ts(&self, index: usize) -> Timestamp {
        self.start + index as i64 * SECS_PER_MINUTE
    }
}

/// Requests of one IP in one minute, kept so alerts can name their
/// contributing addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IpMinute {
    pub minute: u32,
    pub ip: u32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitAggregates {
    pub range: TimeRange,
    pub per_country: BTreeMap<CountryCode, CountryMinuteSeries>,
    /// Exact total requests per client IP.
    pub per_ip: BTreeMap<u32, u64>,
    pub ip_minutes: BTreeMap<CountryCode, Vec<IpMinute>>,
    pub total_requests: u64,
    pub outside_range: u64,
    pub whitelisted: u64,
}

impl VisitAggregates {
    pub fn empty(range: TimeRange) -> Self {
        VisitAggregates {
            range,
            per_country: BTreeMap::new(),
            per_ip: BTreeMap::new(),
            ip_minutes: BTreeMap::new(),
            total_requests: 0,
            outside_range: 0,
            whitelisted: 0,
        }
    }

    /// Fold one record in. Records outside the range or from whitelisted
    /// addresses are only counted.
    pub fn add(&mut self, record: &AccessRecord, table: &GeoIpTable, whitelist: &Whitelist) {
        if !self.range.contains(record.timestamp) {
            self.outside_range += 1;
            return;
        }
        let ip = u32::from(record.client_ip);
        if whitelist.contains(ip) {
            self.whitelisted += 1;
            return;
        }
        let count = record.request_count as u64;
        let country = table.lookup_u32(ip);
        let minute = self.range.minute_index(record.timestamp);
        let range = self.range;
        self.per_country
            .entry(country)
            .or_insert_with(|| CountryMinuteSeries::zeros(country, range))
            .counts[minute] += count;
        *self.per_ip.entry(ip).or_insert(0) += count;
        self.ip_minutes.entry(country).or_default().push(IpMinute {
            minute: minute as u32,
            ip,
            count,
        });
        self.total_requests += count;
    }

    /// Combine shard results over the same range.
    pub fn merge(&mut self, other: VisitAggregates) {
        assert_eq!(self.range, other.range, "merging aggregates over different ranges");
        for (cc, series) in other.per_country {
            match self.per_country.get_mut(&cc) {
                Some(mine) => mine
                    .counts
                    .iter_mut()
                    .zip(series.counts)
                    .for_each(|(a, b)| *a += b),
                None => {
                    self.per_country.insert(cc, series);
                }
            }
        }
        for (ip, n) in other.per_ip {
            *self.per_ip.entry(ip).or_insert(0) += n;
        }
        for (cc, events) in other.ip_minutes {
            self.ip_minutes.entry(cc).or_default().extend(events);
        }
        self.total_requests += other.total_requests;
        self.outside_range += other.outside_range;
        self.whitelisted += other.whitelisted;
    }

    /// Requests per IP of `country` in minutes `[first, last]`, ranked.
    pub fn contributors(&self, country: CountryCode, first: usize, last: usize, k: usize) -> Vec<(u32, u64)> {
        let mut per_ip: BTreeMap<u32, u64> = BTreeMap::new();
        for e in self.ip_minutes.get(&country).into_iter().flatten() {
            let m = e.minute as usize;
            if first <= m && m <= last {
                *per_ip.entry(e.ip).or_insert(0) += e.count;
            }
        }
        top_k_ips(per_ip, k)
    }
}

/// Geolocate and bucket `records` into per-country minute counts over
/// `range`, after dropping whitelisted addresses.
pub fn aggregate_visits<'a, I>(
    records: I,
    table: &GeoIpTable,
    range: TimeRange,
    whitelist: &Whitelist,
) -> VisitAggregates
where
    I: IntoIterator<Item = &'a AccessRecord>,
{
    let mut agg = VisitAggregates::empty(range);
    for r in records {
        agg.add(r, table, whitelist);
    }
    agg
}

/// One country of the map export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapRecord {
    pub country: CountryCode,
    pub total_visits: u64,
    pub distinct_ips: usize,
    /// Highest-ranked IPs of this country among the globally ranked list.
    pub top_ips: Vec<(u32, u64)>,
}

/// Per-country map records: totals over all visits, tooltip IPs drawn
/// from `ranked` (the global top-K list). Ordered by total descending,
/// then country code.
pub fn map_records(
    agg: &VisitAggregates,
    ranked: &[(u32, u64)],
    table: &GeoIpTable,
    per_country: usize,
) -> Vec<MapRecord> {
    let mut records: BTreeMap<CountryCode, MapRecord> = agg
        .per_country
        .iter()
        .map(|(cc, s)| {
            (
                *cc,
                MapRecord {
                    country: *cc,
                    total_visits: s.total(),
                    distinct_ips: 0,
                    top_ips: Vec::new(),
                },
            )
        })
        .collect();
    for &ip in agg.per_ip.keys() {
        if let Some(r) = records.get_mut(&table.lookup_u32(ip)) {
            r.distinct_ips += 1;
        }
    }
    // `ranked` is already in rank order.
    for &(ip, n) in ranked {
        if let Some(r) = records.get_mut(&table.lookup_u32(ip)) {
            if r.top_ips.len() < per_country {
                r.top_ips.push((ip, n));
            }
        }
    }
    let mut out: Vec<MapRecord> = records.into_values().collect();
    out.sort_by(|a, b| b.total_visits.cmp(&a.total_visits).then(a.country.cmp(&b.country)));
    out
}
