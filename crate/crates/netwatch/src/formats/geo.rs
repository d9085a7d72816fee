//! Geo-IP table, access records, whitelist and the map export.
//!
//! Geo table: CSV `ip_from,ip_to,country_code,country_name`, addresses as
//! unsigned integers or dotted quads, fields optionally quoted.
//!
//! Access records: CSV `timestamp,client_ip,service[,request_count]` or
//! JSON lines with those keys; `request_count` defaults to 1.
//!
//! Whitelist: one address or CIDR block per line, `#` comments.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::net::Ipv4Addr;
use std::path::Path;

use netwatch_core::geo::{
    AccessRecord, Ccdf, Cidr, CountryCode, GeoEntry, GeoIpTable, MapRecord, Whitelist,
};
use netwatch_core::{Error as CoreError, Timestamp};
use serde::{Deserialize, Serialize};

use super::alerts::IpCount;
use crate::error::{Error, Result};
use crate::fsutil::{atomic_write, read_to_string};
use crate::ingest::{parse_timestamp, InputFormat, LineParser, ParseReport};

fn parse_ip(s: &str) -> std::result::Result<u32, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u32>() {
        return Ok(n);
    }
    s.parse::<Ipv4Addr>()
        .map(u32::from)
        .map_err(|_| format!("bad IPv4 address {s:?}"))
}

pub fn load_geo_table(path: &Path) -> Result<GeoIpTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if line == 1 && row.get(0).is_some_and(|f| f.trim() == "ip_from") {
            continue;
        }
        if row.len() < 3 {
            return Err(Error::parse(path, line, "expected ip_from,ip_to,country_code[,country_name]"));
        }
        let ip = |i: usize| parse_ip(&row[i]).map_err(|r| Error::parse(path, line, r));
        let code = row[2].trim();
        // ip2location marks unassigned space with "-".
        let country = if code == "-" {
            CountryCode::UNKNOWN
        } else {
            CountryCode::new(code).map_err(|e| Error::parse(path, line, e.to_string()))?
        };
        entries.push(GeoEntry {
            start: ip(0)?,
            end: ip(1)?,
            country,
            country_name: row.get(3).unwrap_or("").trim().to_string(),
        });
        lines.push(line);
    }
    GeoIpTable::new(entries).map_err(|e| match e {
        CoreError::InvalidRange { index, .. } => Error::parse(path, lines[index], e.to_string()),
        CoreError::OverlappingRanges { second, .. } => {
            Error::parse(path, lines[second], e.to_string())
        }
        other => other.into(),
    })
}

pub fn write_geo_table(path: &Path, table: &GeoIpTable) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "ip_from,ip_to,country_code,country_name")?;
        for e in table.entries() {
            writeln!(w, "{},{},{},\"{}\"", e.start, e.end, e.country, e.country_name.replace('"', "\"\""))?;
        }
        Ok(())
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTimestamp {
    Epoch(i64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonAccess {
    timestamp: JsonTimestamp,
    client_ip: String,
    service: String,
    #[serde(default = "one")]
    request_count: u32,
}

fn one() -> u32 {
    1
}

fn parse_access_csv(line: &str) -> std::result::Result<Option<AccessRecord>, String> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut f = line.split(',');
    let ts = parse_timestamp(f.next().unwrap_or(""))?;
    let ip = f.next().ok_or("missing client_ip")?.trim();
    let client_ip: Ipv4Addr = ip.parse().map_err(|_| format!("bad client_ip {ip:?}"))?;
    let service = f.next().ok_or("missing service")?.trim().to_string();
    let request_count = match f.next().map(str::trim) {
        None | Some("") => 1,
        Some(n) => n.parse().map_err(|_| format!("bad request_count {n:?}"))?,
    };
    if f.next().is_some() {
        return Err("too many fields".into());
    }
    Ok(Some(AccessRecord {
        timestamp: ts,
        client_ip,
        service,
        request_count,
    }))
}

fn parse_access_json(line: &str) -> std::result::Result<Option<AccessRecord>, String> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let raw: JsonAccess = serde_json::from_str(line).map_err(|e| e.to_string())?;
    Ok(Some(AccessRecord {
        timestamp: match raw.timestamp {
            JsonTimestamp::Epoch(t) => t,
            JsonTimestamp::Text(s) => parse_timestamp(&s)?,
        },
        client_ip: raw
            .client_ip
            .parse()
            .map_err(|_| format!("bad client_ip {:?}", raw.client_ip))?,
        service: raw.service,
        request_count: raw.request_count,
    }))
}

pub fn access_parser<R: BufRead>(reader: R, format: InputFormat) -> LineParser<R, AccessRecord> {
    match format {
        InputFormat::Csv => LineParser::with_parser(reader, parse_access_csv, Some("timestamp,")),
        InputFormat::Jsonl => LineParser::with_parser(reader, parse_access_json, None),
    }
}

/// Read a whole access-record file; bad lines are reported, not fatal.
pub fn read_access_records(path: &Path) -> Result<(Vec<AccessRecord>, ParseReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut parser = access_parser(BufReader::with_capacity(1 << 20, file), InputFormat::from_path(path));
    let records: Vec<AccessRecord> = parser.by_ref().collect();
    let report = parser.finish().map_err(|e| Error::io(path, e))?;
    Ok((records, report))
}

pub fn access_record_csv(r: &AccessRecord) -> String {
    format!("{},{},{},{}", r.timestamp, r.client_ip, r.service, r.request_count)
}

pub fn load_whitelist(path: &Path) -> Result<Whitelist> {
    let mut wl = Whitelist::default();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        let entry = line.split('#').next().unwrap_or("").trim();
        if entry.is_empty() {
            continue;
        }
        wl.push(Cidr::parse(entry).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
    }
    Ok(wl)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub from: Timestamp,
    pub to: Timestamp,
    pub countries: usize,
    pub total_requests: u64,
    pub distinct_ips: usize,
    pub top_k: usize,
    pub ranked_ips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCountry {
    pub country: String,
    pub country_name: String,
    pub total_visits: u64,
    pub distinct_ips: usize,
    pub top_ips: Vec<IpCount>,
}

/// One line per export entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapLine {
    Summary(MapSummary),
    Country(MapCountry),
}

pub fn write_map_export(path: &Path, summary: &MapSummary, records: &[MapRecord], table: &GeoIpTable) -> Result<()> {
    let mut names = std::collections::BTreeMap::new();
    for e in table.entries() {
        names.entry(e.country).or_insert_with(|| e.country_name.clone());
    }
    atomic_write(path, |w| {
        let line = |v: &MapLine| serde_json::to_string(v).expect("map line serializes");
        writeln!(w, "{}", line(&MapLine::Summary(summary.clone())))?;
        for r in records {
            let c = MapCountry {
                country: r.country.to_string(),
                country_name: names.get(&r.country).cloned().unwrap_or_default(),
                total_visits: r.total_visits,
                distinct_ips: r.distinct_ips,
                top_ips: IpCount::list(&r.top_ips),
            };
            writeln!(w, "{}", line(&MapLine::Country(c)))?;
        }
        Ok(())
    })
}

/// `rank,ip,count,country`.
pub fn write_top_ips(path: &Path, ranked: &[(u32, u64)], table: &GeoIpTable) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "rank,ip,count,country")?;
        for (i, &(ip, n)) in ranked.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i + 1, Ipv4Addr::from(ip), n, table.lookup_u32(ip))?;
        }
        Ok(())
    })
}

pub fn read_top_ips(path: &Path) -> Result<Vec<(u32, u64)>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::parse(path, i + 1, "expected rank,ip,count,country");
            if f.len() != 4 {
                return Err(bad());
            }
            Ok((parse_ip(f[1]).map_err(|_| bad())?, f[2].parse().map_err(|_| bad())?))
        })
        .collect()
}

/// `x,ccdf` at every distinct per-minute count.
pub fn write_ccdf(path: &Path, ccdf: &Ccdf) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "x,ccdf")?;
        for &(x, p) in ccdf.points() {
            writeln!(w, "{x},{p}")?;
        }
        Ok(())
    })
}
