use std::collections::BTreeMap;

use netwatch_core::baseline::WeeklyBaseline;
use netwatch_core::detect::{detect_rule, DetectionRule};
use netwatch_core::series::{regularize, GapPolicy, MetricSeries};
use netwatch_core::time::align_down;
use netwatch_core::{Duration, Timestamp};
use serde::Serialize;
use serde_json::Value;

use super::{rate, tagged, Stopwatch};
use crate::config::RunConfig;
use crate::formats::alerts::{append_jsonl, AlertRecord};
use crate::formats::baseline::{baseline_path, load_baseline};
use crate::formats::rules::load_rules;
use crate::formats::state::{load_state, save_state};
use crate::error::Result;
use crate::ingest::HistoryStore;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleReport {
    pub rule_id: String,
    pub elements: usize,
    pub notified: bool,
    pub micros: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectReport {
    pub now: Timestamp,
    pub rules: Vec<RuleReport>,
    pub alerts: Vec<AlertRecord>,
    pub rules_evaluated: usize,
    pub rules_failed: usize,
    pub elements: usize,
    pub elapsed_secs: f64,
    pub elements_per_sec: f64,
}

impl DetectReport {
    pub fn lines(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.rules.iter().map(|r| tagged("rule", "detect", r)).collect();
        out.extend(self.alerts.iter().map(|a| tagged("alert", "detect", a)));
        out.push(tagged(
            "summary",
            "detect",
            &serde_json::json!({
                "now": self.now,
                "rules": self.rules.len(),
                "rules_evaluated": self.rules_evaluated,
                "rules_failed": self.rules_failed,
                "alerts": self.alerts.len(),
                "elements": self.elements,
                "elapsed_secs": self.elapsed_secs,
                "elements_per_sec": self.elements_per_sec,
            }),
        ));
        out
    }
}

/// Series of `metrics` over `(now - span, now]` from the history store.
fn recent_series(
    cfg: &RunConfig,
    metrics: impl IntoIterator<Item = String>,
    now: Timestamp,
    span: Duration,
) -> Result<BTreeMap<String, MetricSeries>> {
    let history = HistoryStore::new(cfg.history_dir());
    let res = cfg.baseline.config().resolution;
    let mut out = BTreeMap::new();
    for m in metrics {
        let Some((raw, _)) = history.read_range(&m, now - span.as_secs() + 1, now + 1)? else {
            continue;
        };
        let series = if raw.is_empty() {
            MetricSeries::new(m.as_str(), res, align_down(now, res), Vec::new())?
        } else {
            regularize(&m, raw, res, GapPolicy::LeaveGap, cfg.baseline.aggregation(&m))?
        };
        out.insert(m, series);
    }
    Ok(out)
}

/// One detection cycle at `now`: evaluate every rule, pass violations
/// through containment, append notifications and persist the state.
///
/// A rule that cannot be evaluated is reported and skipped. Only an
/// unreadable rules or state file is fatal.
pub fn cmd_detect(cfg: &RunConfig, now: Timestamp) -> Result<DetectReport> {
    let clock = Stopwatch::start();
    let rules = load_rules(&cfg.rules_file(), &cfg.detect.rule_defaults())?;
    let bcfg = cfg.baseline.config();
    let mut errors: BTreeMap<String, String> = BTreeMap::new();

    let valid: Vec<&DetectionRule> = rules
        .iter()
        .filter(|r| match r.validate(bcfg.resolution) {
            Ok(()) => true,
            Err(e) => {
                errors.insert(r.rule_id.clone(), e.to_string());
                false
            }
        })
        .collect();

    let mut baselines: BTreeMap<String, WeeklyBaseline> = BTreeMap::new();
    let mut baseline_errors: BTreeMap<String, String> = BTreeMap::new();
    for r in &valid {
        for m in r.condition.baseline_metrics() {
            if baselines.contains_key(m) || baseline_errors.contains_key(m) {
                continue;
            }
            let loaded = load_baseline(&baseline_path(&cfg.baseline_dir(), m)).and_then(|b| {
                b.ensure_compatible(bcfg.window, bcfg.resolution)?;
                Ok(b)
            });
            match loaded {
                Ok(b) => {
                    baselines.insert(m.to_string(), b);
                }
                Err(e) => {
                    baseline_errors.insert(m.to_string(), e.to_string());
                }
            }
        }
    }

    let span = valid
        .iter()
        .map(|r| r.lookback + r.smoothing.unwrap_or(Duration::ZERO))
        .max()
        .unwrap_or(Duration::ZERO);
    let metrics: std::collections::BTreeSet<String> = valid
        .iter()
        .flat_map(|r| {
            let mut ms: Vec<String> = r.condition.metrics().into_iter().map(String::from).collect();
            ms.push(r.target.clone());
            ms
        })
        .collect();
    let source = recent_series(cfg, metrics, now, span)?;

    let state_path = cfg.state_file();
    let mut state = load_state(&state_path)?;
    let mut reports = Vec::with_capacity(rules.len());
    let mut alerts = Vec::new();
    let mut elements = 0;
    for rule in &rules {
        let t = std::time::Instant::now();
        let mut report = RuleReport {
            rule_id: rule.rule_id.clone(),
            elements: 0,
            notified: false,
            micros: 0,
            error: errors.get(&rule.rule_id).cloned(),
        };
        if report.error.is_none() {
            report.error = rule
                .condition
                .baseline_metrics()
                .into_iter()
                .find_map(|m| baseline_errors.get(m).map(|e| format!("baseline for {m}: {e}")));
        }
        if report.error.is_none() {
            match detect_rule(rule, &source, &baselines, &mut state, now) {
                Ok((alert, n)) => {
                    report.elements = n;
                    elements += n;
                    if let Some(a) = alert {
                        report.notified = true;
                        alerts.push(AlertRecord::from(&a));
                    }
                }
                Err(e) => report.error = Some(e.to_string()),
            }
        }
        report.micros = t.elapsed().as_micros();
        reports.push(report);
    }

    append_jsonl(&cfg.alerts_file(), &alerts)?;
    save_state(&state_path, &state)?;
    let rules_failed = reports.iter().filter(|r| r.error.is_some()).count();
    let elapsed_secs = clock.secs();
    Ok(DetectReport {
        now,
        rules_evaluated: reports.len() - rules_failed,
        rules_failed,
        rules: reports,
        alerts,
        elements,
        elapsed_secs,
        elements_per_sec: rate(elements, elapsed_secs),
    })
}
