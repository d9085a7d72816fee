//! Baseline text file.
//!
//! ```text
//! # netwatch baseline
//! format_version=1
//! metric_id=flows_in
//! weeks_back=8
//! window_secs=600
//! resolution_secs=60
//! week_period_secs=604800
//! deviation_multiplier=3
//! built_at=1709510400
//! weeks_used=8
//! slots=1008
//! slot_index,expected,deviation,sample_count
//! 0,1520.25,61.0034,80
//! ...
//! # end
//! ```
//!
//! Reals are written in shortest round-trip form, so a load reproduces the
//! saved baseline bit for bit. The `# end` trailer detects truncation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use netwatch_core::baseline::{BaselineConfig, SlotStats, WeeklyBaseline};
use netwatch_core::time::SECS_PER_WEEK;
use netwatch_core::Duration;

use crate::error::{Error, Result};
use crate::fsutil::{atomic_write, read_to_string};

pub const BASELINE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# netwatch baseline";
const COLUMNS: &str = "slot_index,expected,deviation,sample_count";
const TRAILER: &str = "# end";
const EXTENSION: &str = "baseline";

pub fn baseline_path(dir: &Path, metric_id: &str) -> PathBuf {
    dir.join(format!("{metric_id}.{EXTENSION}"))
}

pub fn baseline_to_string(b: &WeeklyBaseline) -> String {
    let c = b.config();
    let mut s = String::with_capacity(64 + 32 * b.slots().len());
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "format_version={BASELINE_FORMAT_VERSION}");
    let _ = writeln!(s, "metric_id={}", b.metric_id());
    let _ = writeln!(s, "weeks_back={}", c.weeks_back);
    let _ = writeln!(s, "window_secs={}", c.window.as_secs());
    let _ = writeln!(s, "resolution_secs={}", c.resolution.as_secs());
    let _ = writeln!(s, "week_period_secs={SECS_PER_WEEK}");
    let _ = writeln!(s, "deviation_multiplier={}", c.deviation_multiplier);
    let _ = writeln!(s, "built_at={}", b.built_at());
    let _ = writeln!(s, "weeks_used={}", b.weeks_used());
    let _ = writeln!(s, "slots={}", b.slots().len());
    let _ = writeln!(s, "{COLUMNS}");
    for (i, slot) in b.slots().iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{}",
            slot.expected, slot.deviation, slot.sample_count
        );
    }
    let _ = writeln!(s, "{TRAILER}");
    s
}

pub fn save_baseline(path: &Path, b: &WeeklyBaseline) -> Result<()> {
    let text = baseline_to_string(b);
    atomic_write(path, |w| w.write_all(text.as_bytes()))
}

pub fn load_baseline(path: &Path) -> Result<WeeklyBaseline> {
    parse_baseline(&read_to_string(path)?, path)
}

fn field<T: std::str::FromStr>(
    header: &BTreeMap<&str, (usize, &str)>,
    key: &str,
    path: &Path,
) -> Result<T> {
    let (line, raw) = header.get(key).ok_or_else(|| Error::Truncated {
        path: path.into(),
        reason: format!("missing header field {key}"),
    })?;
    raw.parse()
        .map_err(|_| Error::parse(path, *line, format!("bad {key} value {raw:?}")))
}

pub fn parse_baseline(text: &str, path: &Path) -> Result<WeeklyBaseline> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, _)) => return Err(Error::parse(path, n, "not a baseline file")),
        None => {
            return Err(Error::Truncated {
                path: path.into(),
                reason: "empty file".into(),
            })
        }
    }

    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut saw_columns = false;
    for (n, line) in lines.by_ref() {
        if line == COLUMNS {
            saw_columns = true;
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, n, "expected key=value header line"))?;
        header.insert(k, (n, v));
    }

    let version: String = field(&header, "format_version", path)?;
    if version != BASELINE_FORMAT_VERSION.to_string() {
        return Err(Error::Version {
            path: path.into(),
            found: version,
            expected: BASELINE_FORMAT_VERSION,
        });
    }
    if !saw_columns {
        return Err(Error::Truncated {
            path: path.into(),
            reason: "no slot table".into(),
        });
    }
    let period: i64 = field(&header, "week_period_secs", path)?;
    if period != SECS_PER_WEEK {
        return Err(Error::Config(format!(
            "{}: week_period_secs={period}, only {SECS_PER_WEEK} is supported",
            path.display()
        )));
    }
    let metric_id: String = field(&header, "metric_id", path)?;
    let config = BaselineConfig {
        weeks_back: field(&header, "weeks_back", path)?,
        window: Duration::from_secs(field(&header, "window_secs", path)?),
        resolution: Duration::from_secs(field(&header, "resolution_secs", path)?),
        deviation_multiplier: field(&header, "deviation_multiplier", path)?,
    };
    let built_at = field(&header, "built_at", path)?;
    let weeks_used = field(&header, "weeks_used", path)?;
    let declared: usize = field(&header, "slots", path)?;

    let mut slots = Vec::with_capacity(declared);
    let mut complete = false;
    for (n, line) in lines {
        if line == TRAILER {
            complete = true;
            break;
        }
        let mut parts = line.split(',');
        let mut next = |what: &str| {
            parts
                .next()
                .ok_or_else(|| Error::parse(path, n, format!("missing {what}")))
        };
        let index: usize = next("slot_index")?
            .parse()
            .map_err(|_| Error::parse(path, n, "bad slot_index"))?;
        if index != slots.len() {
            return Err(Error::parse(
                path,
                n,
                format!("slot {index} out of order, expected {}", slots.len()),
            ));
        }
        let real = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, n, format!("bad {what} {s:?}")))
        };
        let expected = real(next("expected")?, "expected")?;
        let deviation = real(next("deviation")?, "deviation")?;
        let sample_count = next("sample_count")?
            .parse()
            .map_err(|_| Error::parse(path, n, "bad sample_count"))?;
        if parts.next().is_some() {
            return Err(Error::parse(path, n, "trailing fields"));
        }
        slots.push(SlotStats {
            expected,
            deviation,
            sample_count,
        });
    }
    if !complete || slots.len() != declared {
        return Err(Error::Truncated {
            path: path.into(),
            reason: format!("{} of {declared} slots, trailer present: {complete}", slots.len()),
        });
    }
    Ok(WeeklyBaseline::from_parts(
        metric_id, config, slots, built_at, weeks_used,
    )?)
}
