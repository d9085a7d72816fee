//! Subcommand implementations. Each returns a typed report whose
//! [`lines`](BaselineReport::lines) are the JSON-lines run report.

mod baseline;
mod bench;
mod detect;
mod geo;
mod synth;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub use baseline::{cmd_baseline, BaselineFailure, BaselineReport, MetricBuild};
pub use bench::{cmd_bench, BenchReport, BenchRun, BenchStat};
pub use detect::{cmd_detect, DetectReport, RuleReport};
pub use geo::{cmd_geo_detect, cmd_geo_report, GeoDetectReport, GeoReport};
pub use synth::{cmd_synth, default_rules, SynthReport};

use crate::error::Result;
use crate::fsutil::append_lines;

/// Tag `value` (a JSON object) with a record kind and command name.
fn tagged<T: Serialize>(record: &str, command: &str, value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("report serializes");
    if let Value::Object(map) = &mut v {
        map.insert("record".into(), json!(record));
        map.insert("command".into(), json!(command));
    }
    v
}

/// Items per second, 0 for an empty or instantaneous run.
fn rate(items: usize, secs: f64) -> f64 {
    if secs > 0.0 {
        items as f64 / secs
    } else {
        0.0
    }
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(Instant::now())
    }

    fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Append report lines to the run log.
pub fn log_report(path: &Path, lines: &[Value]) -> Result<()> {
    append_lines(path, lines.iter().map(Value::to_string))?;
    Ok(())
}
