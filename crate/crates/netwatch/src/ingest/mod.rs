//! Metric record parsing.
//!
//! CSV lines are `timestamp,metric_id,value[,key=value;key=value]`. The
//! structured alternative is one JSON object per line with the same field
//! names and `tags` as an object. Timestamps are integer epoch seconds or
//! RFC 3339 strings; both normalize to epoch seconds. Blank lines, lines
//! starting with `#` and a leading `timestamp,...` header are skipped.

mod history;
mod store;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead};
use std::str::FromStr;

use netwatch_core::Timestamp;
use serde::{Deserialize, Serialize};

pub use history::{day_of, HistoryStore, RawPoints};
pub use store::{IngestSummary, RecentStore, SharedStore, StoreSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub timestamp: Timestamp,
    pub metric_id: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl InputFormat {
    /// `.jsonl` / `.ndjson` / `.json` paths are structured, anything else CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            other => Err(format!("unknown input format {other:?}")),
        }
    }
}

/// Letters, digits and `_ . : -`, not starting with `.`.
pub fn is_valid_metric_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b':' | b'-'))
}

fn is_valid_tag_text(s: &str) -> bool {
    !s.chars()
        .any(|c| matches!(c, ',' | ';' | '=') || c.is_control())
}

/// Integer epoch seconds or RFC 3339.
pub fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    let s = s.trim();
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return s.parse().map_err(|_| format!("timestamp out of range: {s:?}"));
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|t| t.timestamp())
        .map_err(|_| format!("bad timestamp {s:?}"))
}

impl MetricRecord {
    pub fn validate(&self) -> Result<(), String> {
        if !is_valid_metric_id(&self.metric_id) {
            return Err(format!("bad metric_id {:?}", self.metric_id));
        }
        if !self.value.is_finite() {
            return Err(format!("non-finite value {}", self.value));
        }
        for (k, v) in &self.tags {
            if k.is_empty() || !is_valid_tag_text(k) || !is_valid_tag_text(v) {
                return Err(format!("bad tag {k:?}={v:?}"));
            }
        }
        Ok(())
    }

    /// CSV line without the trailing newline.
    pub fn to_csv_line(&self) -> String {
        let mut s = format!("{},{},{}", self.timestamp, self.metric_id, self.value);
        for (i, (k, v)) in self.tags.iter().enumerate() {
            s.push(if i == 0 { ',' } else { ';' });
            let _ = write!(s, "{k}={v}");
        }
        s
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn matches_tags(&self, filter: &BTreeMap<String, String>) -> bool {
        filter.iter().all(|(k, v)| self.tags.get(k) == Some(v))
    }
}

fn parse_csv_line(line: &str) -> Result<MetricRecord, String> {
    let mut fields = line.splitn(4, ',');
    let ts = fields.next().unwrap_or("");
    let metric_id = fields.next().ok_or("missing metric_id")?.trim();
    let value = fields.next().ok_or("missing value")?.trim();
    let value: f64 = value
        .parse()
        .map_err(|_| format!("non-numeric value {value:?}"))?;
    let mut tags = BTreeMap::new();
    if let Some(t) = fields.next() {
        for pair in t.trim().split(';').filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("tag without '=': {pair:?}"))?;
            tags.insert(k.to_string(), v.to_string());
        }
    }
    let rec = MetricRecord {
        timestamp: parse_timestamp(ts)?,
        metric_id: metric_id.to_string(),
        value,
        tags,
    };
    rec.validate()?;
    Ok(rec)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTimestamp {
    Epoch(i64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonRecord {
    timestamp: JsonTimestamp,
    metric_id: String,
    value: f64,
    #[serde(default)]
    tags: BTreeMap<String, String>,
}

fn parse_json_line(line: &str) -> Result<MetricRecord, String> {
    let raw: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let timestamp = match raw.timestamp {
        JsonTimestamp::Epoch(t) => t,
        JsonTimestamp::Text(s) => parse_timestamp(&s)?,
    };
    let rec = MetricRecord {
        timestamp,
        metric_id: raw.metric_id,
        value: raw.value,
        tags: raw.tags,
    };
    rec.validate()?;
    Ok(rec)
}

/// One rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

/// Outcome counters of one parse. Only the first `MAX_KEPT_ERRORS` line
/// errors are kept; `invalid` counts all of them.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ParseReport {
    pub lines: usize,
    pub records: usize,
    pub invalid: usize,
    pub errors: Vec<LineError>,
}

pub const MAX_KEPT_ERRORS: usize = 1000;

impl ParseReport {
    pub fn reject(&mut self, line: usize, reason: String) {
        self.invalid += 1;
        if self.errors.len() < MAX_KEPT_ERRORS {
            self.errors.push(LineError { line, reason });
        }
    }

    pub fn merge(&mut self, other: ParseReport) {
        self.lines += other.lines;
        self.records += other.records;
        self.invalid += other.invalid;
        let room = MAX_KEPT_ERRORS.saturating_sub(self.errors.len());
        self.errors.extend(other.errors.into_iter().take(room));
    }
}

/// Parse one line. `Ok(None)` for blank lines and comments.
pub fn parse_metric_line(line: &str, format: InputFormat) -> Result<Option<MetricRecord>, String> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    match format {
        InputFormat::Csv => parse_csv_line(line).map(Some),
        InputFormat::Jsonl => parse_json_line(line).map(Some),
    }
}

/// Streaming line parser: yields valid items in input order and keeps a
/// report of rejected lines.
pub struct LineParser<R, T> {
    reader: R,
    parse: fn(&str) -> Result<Option<T>, String>,
    header: Option<&'static str>,
    buf: String,
    report: ParseReport,
    failure: Option<io::Error>,
}

/// Metric records from `reader`.
pub type MetricParser<R> = LineParser<R, MetricRecord>;

fn parse_csv_metric(line: &str) -> Result<Option<MetricRecord>, String> {
    parse_metric_line(line, InputFormat::Csv)
}

fn parse_json_metric(line: &str) -> Result<Option<MetricRecord>, String> {
    parse_metric_line(line, InputFormat::Jsonl)
}

impl<R: BufRead> LineParser<R, MetricRecord> {
    pub fn new(reader: R, format: InputFormat) -> Self {
        match format {
            InputFormat::Csv => LineParser::with_parser(reader, parse_csv_metric, Some("timestamp,")),
            InputFormat::Jsonl => LineParser::with_parser(reader, parse_json_metric, None),
        }
    }
}

impl<R: BufRead, T> LineParser<R, T> {
    /// `parse` returns `Ok(None)` for lines to skip silently. A first line
    /// starting with `header` is skipped.
    pub fn with_parser(
        reader: R,
        parse: fn(&str) -> Result<Option<T>, String>,
        header: Option<&'static str>,
    ) -> Self {
        LineParser {
            reader,
            parse,
            header,
            buf: String::new(),
            report: ParseReport::default(),
            failure: None,
        }
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    /// The report, or the read error that stopped parsing.
    pub fn finish(self) -> io::Result<ParseReport> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.report),
        }
    }
}

impl<R: BufRead, T> Iterator for LineParser<R, T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failure = Some(e);
                    return None;
                }
            }
            self.report.lines += 1;
            let n = self.report.lines;
            if n == 1 && self.header.is_some_and(|h| self.buf.starts_with(h)) {
                continue;
            }
            match (self.parse)(&self.buf) {
                Ok(Some(item)) => {
                    self.report.records += 1;
                    return Some(item);
                }
                Ok(None) => {}
                Err(reason) => self.report.reject(n, reason),
            }
        }
    }
}

/// Parse a whole stream. Only a read failure is an error.
pub fn parse_metric_stream<R: BufRead>(
    reader: R,
    format: InputFormat,
) -> io::Result<(Vec<MetricRecord>, ParseReport)> {
    let mut parser = MetricParser::new(reader, format);
    let records: Vec<MetricRecord> = parser.by_ref().collect();
    Ok((records, parser.finish()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_line_csv() {
        let input = "timestamp,metric_id,value\n60,flows_in,3\n120,flows_in,4.5,dir=in;svc=web\n2024-01-01T00:03:00Z,flows_out,0\n";
        let (recs, rep) = parse_metric_stream(input.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rep.invalid, 0);
        assert_eq!(recs[1].tags.get("svc").map(String::as_str), Some("web"));
        assert_eq!(recs[2].timestamp, 1_704_067_380);
    }

    #[test]
    fn bad_lines_are_reported_with_numbers() {
        let input = "60,m,3\n# note\n120,m,abc\n180,,1\n240,m,NaN\n\n300,m,1\n";
        let (recs, rep) = parse_metric_stream(input.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(recs.len(), 2);
        let lines: Vec<usize> = rep.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
        assert_eq!(rep.lines, 7);
    }

    #[test]
    fn json_lines_accept_both_timestamp_forms() {
        let input = "{\"timestamp\":60,\"metric_id\":\"m\",\"value\":1}\n{\"timestamp\":\"1970-01-01T00:02:00+00:00\",\"metric_id\":\"m\",\"value\":2,\"tags\":{\"a\":\"b\"}}\n{\"metric_id\":\"m\"}\n";
        let (recs, rep) = parse_metric_stream(input.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(recs.iter().map(|r| r.timestamp).collect::<Vec<_>>(), vec![60, 120]);
        assert_eq!(rep.errors[0].line, 3);
    }

    #[test]
    fn metric_ids_are_path_safe() {
        assert!(is_valid_metric_id("flows_in:tcp-443.v4"));
        for bad in ["", "..", ".x", "a/b", "a b", "a,b"] {
            assert!(!is_valid_metric_id(bad), "{bad}");
        }
    }
}
