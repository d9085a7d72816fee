//! Containment state file: one tab-separated line per rule, `-` for an
//! absent value.
//!
//! ```text
//! # netwatch containment state
//! format_version=1
//! rule_id  last_notified_at  start  end  open  peak_value  threshold_at_peak  first_notified_at  notify_count
//! ```

use std::path::Path;

use netwatch_core::detect::{ContainmentState, EpisodeState, RuleState};

use crate::error::{Error, Result};
use crate::fsutil::{atomic_write, read_to_string};

pub const STATE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# netwatch containment state";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn state_to_string(state: &ContainmentState) -> String {
    let mut s = format!("{MAGIC}\nformat_version={STATE_FORMAT_VERSION}\n");
    for (id, r) in state.iter() {
        let ep = r.episode;
        let cols = [
            id.to_string(),
            opt(r.last_notified_at),
            opt(ep.map(|e| e.start)),
            opt(ep.map(|e| e.end)),
            opt(ep.map(|e| e.open)),
            opt(ep.map(|e| e.peak_value)),
            opt(ep.map(|e| e.threshold_at_peak)),
            opt(ep.and_then(|e| e.first_notified_at)),
            opt(ep.map(|e| e.notify_count)),
        ];
        s.push_str(&cols.join("\t"));
        s.push('\n');
    }
    s
}

pub fn parse_state(text: &str, path: &Path) -> Result<ContainmentState> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    if lines.next().map(|(_, l)| l) != Some(MAGIC) {
        return Err(Error::parse(path, 1, "not a containment state file"));
    }
    match lines.next() {
        Some((_, l)) if l == format!("format_version={STATE_FORMAT_VERSION}") => {}
        Some((_, l)) => {
            return Err(Error::Version {
                path: path.into(),
                found: l.trim_start_matches("format_version=").into(),
                expected: STATE_FORMAT_VERSION,
            })
        }
        None => {
            return Err(Error::Truncated {
                path: path.into(),
                reason: "missing format_version".into(),
            })
        }
    }
    let mut state = ContainmentState::new();
    for (n, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 9 {
            return Err(Error::parse(path, n, format!("expected 9 columns, found {}", cols.len())));
        }
        fn get<T: std::str::FromStr>(s: &str, path: &Path, n: usize) -> Result<Option<T>> {
            if s == "-" {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::parse(path, n, format!("bad value {s:?}")))
        }
        let episode = match (
            get(cols[2], path, n)?,
            get(cols[3], path, n)?,
            get(cols[4], path, n)?,
            get(cols[5], path, n)?,
            get(cols[6], path, n)?,
            get(cols[8], path, n)?,
        ) {
            (Some(start), Some(end), Some(open), Some(peak_value), Some(threshold_at_peak), Some(notify_count)) => {
                Some(EpisodeState {
                    start,
                    end,
                    open,
                    peak_value,
                    threshold_at_peak,
                    first_notified_at: get(cols[7], path, n)?,
                    notify_count,
                })
            }
            (None, None, None, None, None, None) => None,
            _ => return Err(Error::parse(path, n, "partially specified episode")),
        };
        state.insert(
            cols[0],
            RuleState {
                last_notified_at: get(cols[1], path, n)?,
                episode,
            },
        );
    }
    Ok(state)
}

/// Missing file is an empty state.
pub fn load_state(path: &Path) -> Result<ContainmentState> {
    if !path.exists() {
        return Ok(ContainmentState::new());
    }
    parse_state(&read_to_string(path)?, path)
}

pub fn save_state(path: &Path, state: &ContainmentState) -> Result<()> {
    let text = state_to_string(state);
    atomic_write(path, |w| w.write_all(text.as_bytes()))
}
