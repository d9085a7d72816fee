//! Reactive rule engine.
//!
//! A [`DetectionRule`] evaluates a [`Predicate`] on every grid sample of
//! its target metric inside the lookback window. Maximal runs of
//! consecutive satisfying samples form [`ViolationInterval`]s; a run only
//! becomes an alert once it has lasted the rule's time of grace. The
//! [`containment`] layer then decides which alerts are actually notified.

pub mod containment;
mod predicate;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use containment::{apply_containment, Alert, ContainmentState, EpisodeState, RuleState};
pub use predicate::{Comparison, Leaf, Measure, Predicate, Reference};

use crate::baseline::WeeklyBaseline;
use crate::error::{Error, Result};
use crate::series::{moving_average, MetricSeries};
use crate::time::{Duration, Timestamp};
use predicate::Bindings;

pub const DEFAULT_GRACE: Duration = Duration::from_mins(10);
pub const DEFAULT_RENOTIFY_AFTER: Duration = Duration::from_mins(60);
pub const DEFAULT_LOOKBACK: Duration = Duration::from_mins(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Severity {
    Info,
    #[default]
    Warning,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Critical => "critical",
        }
    }

    pub fn parse(s: &str) -> Option<Severity> {
        match s {
            "info" => Some(Severity::Info),
            "warning" => Some(Severity::Warning),
            "critical" => Some(Severity::Critical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRule {
    pub rule_id: String,
    /// Metric whose sample grid drives evaluation and whose name the alert carries.
    pub target: String,
    pub condition: Predicate,
    /// Minimum uninterrupted violation before an alert exists.
    pub grace: Duration,
    pub lookback: Duration,
    /// Minimum spacing between notifications of this rule.
    pub renotify_after: Duration,
    pub severity: Severity,
    /// Trailing moving-average window applied to every referenced metric
    /// before evaluation; `None` evaluates raw samples.
    pub smoothing: Option<Duration>,
}

impl DetectionRule {
    /// Rule with default grace, lookback and re-notification interval.
    pub fn new(rule_id: impl Into<String>, target: impl Into<String>, condition: Predicate) -> Self {
        DetectionRule {
            rule_id: rule_id.into(),
            target: target.into(),
            condition,
            grace: DEFAULT_GRACE,
            lookback: DEFAULT_LOOKBACK,
            renotify_after: DEFAULT_RENOTIFY_AFTER,
            severity: Severity::default(),
            smoothing: None,
        }
    }

    pub fn validate(&self, resolution: Duration) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidRule {
                rule: self.rule_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.rule_id.is_empty() {
            return fail("empty rule_id");
        }
        if self.target.is_empty() {
            return fail("empty target metric");
        }
        if self.grace < resolution {
            return fail("grace shorter than the metric resolution");
        }
        if self.renotify_after < self.grace {
            return fail("renotify_after shorter than grace");
        }
        if self.lookback < self.grace {
            return fail("lookback shorter than grace");
        }
        if let Some(w) = self.smoothing {
            if !w.is_multiple_of(resolution) {
                return fail("smoothing window is not a multiple of the resolution");
            }
        }
        if let Some(reason) = self.condition.structural_error() {
            return fail(reason);
        }
        Ok(())
    }
}

/// Maximal run of consecutive grid samples satisfying a predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationInterval {
    /// First violating sample.
    pub start: Timestamp,
    /// Last violating sample.
    pub end: Timestamp,
    pub samples: usize,
    pub resolution: Duration,
    /// Largest left-hand side of the predicate's first leaf in the run.
    pub peak_value: f64,
    /// Right-hand side of that leaf at the peak.
    pub threshold_at_peak: f64,
    /// The run reaches the last evaluated sample.
    pub open: bool,
}

impl ViolationInterval {
    /// Time covered by the run: one resolution step per sample.
    pub fn duration(&self) -> Duration {
        Duration::from_secs(self.end - self.start) + self.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleEvaluation {
    pub intervals: Vec<ViolationInterval>,
    /// Samples read across all referenced metrics in the lookback window.
    pub elements: usize,
}

/// Source of recent per-metric samples.
pub trait SeriesSource {
    /// Samples of `metric` with `from < ts <= to`, or `None` if the metric is unknown.
    fn series(&self, metric: &str, from: Timestamp, to: Timestamp) -> Option<MetricSeries>;
}

impl SeriesSource for BTreeMap<String, MetricSeries> {
    fn series(&self, metric: &str, from: Timestamp, to: Timestamp) -> Option<MetricSeries> {
        self.get(metric).map(|s| s.slice(from, to))
    }
}

/// Violation intervals of `rule` over `(now - lookback, now]` that have
/// lasted at least the rule's grace.
///
/// Baseline leaves in invalid slots evaluate false. Continuity is strict:
/// a missing or non-violating sample ends a run.
pub fn evaluate_rule<S: SeriesSource + ?Sized>(
    rule: &DetectionRule,
    source: &S,
    baselines: &BTreeMap<String, WeeklyBaseline>,
    now: Timestamp,
) -> Result<RuleEvaluation> {
    let from = now - rule.lookback.as_secs();
    let fetch_from = from - rule.smoothing.map_or(0, Duration::as_secs);

    let mut metrics: Vec<&str> = rule.condition.metrics().into_iter().collect();
    if !metrics.contains(&rule.target.as_str()) {
        metrics.push(&rule.target);
    }
    let mut prepared = Vec::with_capacity(metrics.len());
    for m in &metrics {
        let raw = source
            .series(m, fetch_from, now)
            .ok_or_else(|| Error::MissingMetric((*m).into()))?;
        let series = match rule.smoothing {
            Some(w) => moving_average(&raw, w)?.into_series().slice(from, now),
            None => raw.slice(from, now),
        };
        prepared.push((*m, series));
    }

    let mut baseline_refs = Vec::new();
    for m in rule.condition.baseline_metrics() {
        let b = baselines
            .get(m)
            .ok_or_else(|| Error::MissingBaseline(m.into()))?;
        let series = &prepared.iter().find(|(id, _)| *id == m).expect("prepared above").1;
        if b.config().resolution != series.resolution() {
            return Err(Error::IncompatibleBaseline {
                metric: m.into(),
                field: "resolution",
                found: b.config().resolution.as_secs(),
                expected: series.resolution().as_secs(),
            });
        }
        baseline_refs.push((m, b));
    }

    let bindings = Bindings {
        series: prepared.iter().map(|(m, s)| (*m, s)).collect(),
        baselines: baseline_refs,
    };
    let target = &prepared
        .iter()
        .find(|(m, _)| *m == rule.target)
        .expect("target prepared")
        .1;
    let elements = prepared.iter().map(|(_, s)| s.len()).sum();
    let mut intervals = scan_intervals(&rule.condition, &bindings, target);
    intervals.retain(|v| v.duration() >= rule.grace);
    Ok(RuleEvaluation { intervals, elements })
}

fn scan_intervals(
    predicate: &Predicate,
    bindings: &Bindings<'_>,
    grid: &MetricSeries,
) -> Vec<ViolationInterval> {
    let primary = predicate.leaves()[0];
    let step = grid.resolution().as_secs();
    let last_ts = grid.last_ts();
    let mut out: Vec<ViolationInterval> = Vec::new();
    let mut current: Option<ViolationInterval> = None;

    for p in grid.points() {
        if !bindings.holds(predicate, p.ts) {
            out.extend(current.take());
            continue;
        }
        let obs = bindings.observe(primary, p.ts);
        let (value, threshold) = obs.map_or((f64::NAN, f64::NAN), |o| (o.value, o.threshold));
        match current.as_mut() {
            Some(run) if run.end + step == p.ts => {
                run.end = p.ts;
                run.samples += 1;
                if value > run.peak_value || run.peak_value.is_nan() {
                    run.peak_value = value;
                    run.threshold_at_peak = threshold;
                }
            }
            _ => {
                out.extend(current.take());
                current = Some(ViolationInterval {
                    start: p.ts,
                    end: p.ts,
                    samples: 1,
                    resolution: grid.resolution(),
                    peak_value: value,
                    threshold_at_peak: threshold,
                    open: false,
                });
            }
        }
    }
    out.extend(current);
    if let (Some(last), Some(run)) = (last_ts, out.last_mut()) {
        run.open = run.end == last;
    }
    out
}

/// Intervals where `incoming` exceeds its baseline upper threshold while
/// `outgoing` is exactly zero, over `(now - lookback, now]`.
pub fn evaluate_composite_outage(
    incoming: &MetricSeries,
    outgoing: &MetricSeries,
    baseline_in: &WeeklyBaseline,
    now: Timestamp,
    lookback: Duration,
) -> Result<Vec<ViolationInterval>> {
    if incoming.resolution() != outgoing.resolution() {
        return Err(Error::GridMismatch("resolutions differ"));
    }
    if !incoming.same_grid(outgoing) {
        return Err(Error::GridMismatch("series are offset from each other"));
    }
    if incoming.metric_id() == outgoing.metric_id() {
        return Err(Error::GridMismatch("incoming and outgoing are the same metric"));
    }
    let mut rule = DetectionRule::new(
        "outage",
        incoming.metric_id(),
        outage_predicate(incoming.metric_id(), outgoing.metric_id()),
    );
    rule.lookback = lookback;
    let mut source = BTreeMap::new();
    source.insert(incoming.metric_id().into(), incoming.clone());
    source.insert(outgoing.metric_id().into(), outgoing.clone());
    let mut baselines = BTreeMap::new();
    baselines.insert(incoming.metric_id().into(), baseline_in.clone());
    Ok(evaluate_rule(&rule, &source, &baselines, now)?.intervals)
}

/// `incoming > baseline upper AND outgoing == 0`.
pub fn outage_predicate(incoming: &str, outgoing: &str) -> Predicate {
    Predicate::And(alloc::vec![
        Predicate::leaf(incoming, Comparison::Gt, Reference::BaselineUpper),
        Predicate::leaf(outgoing, Comparison::Eq, Reference::Zero),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleFailure {
    pub rule_id: String,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CycleOutcome {
    pub alerts: Vec<Alert>,
    pub failures: Vec<RuleFailure>,
    pub rules_evaluated: usize,
    pub elements: usize,
}

/// Evaluate one rule and pass its intervals through containment.
pub fn detect_rule<S: SeriesSource + ?Sized>(
    rule: &DetectionRule,
    source: &S,
    baselines: &BTreeMap<String, WeeklyBaseline>,
    state: &mut ContainmentState,
    now: Timestamp,
) -> Result<(Option<Alert>, usize)> {
    let eval = evaluate_rule(rule, source, baselines, now)?;
    let alert = state.apply(&eval.intervals, rule, now);
    Ok((alert, eval.elements))
}

/// One detection pass over every rule. A failing rule is recorded and
/// skipped; it never aborts the others.
pub fn run_detection_cycle<S: SeriesSource + ?Sized>(
    rules: &[DetectionRule],
    source: &S,
    baselines: &BTreeMap<String, WeeklyBaseline>,
    state: &mut ContainmentState,
    now: Timestamp,
) -> CycleOutcome {
    let mut outcome = CycleOutcome::default();
    for rule in rules {
        match detect_rule(rule, source, baselines, state, now) {
            Ok((alert, elements)) => {
                outcome.rules_evaluated += 1;
                outcome.elements += elements;
                outcome.alerts.extend(alert);
            }
            Err(error) => outcome.failures.push(RuleFailure {
                rule_id: rule.rule_id.clone(),
                error,
            }),
        }
    }
    outcome
}
