//! Alarm containment.
//!
//! Persistent conditions must not page the operator on every cycle. Each
//! rule remembers when it last notified and the episode (alert) it is
//! tracking. A qualifying violation produces a notification only when no
//! previous notification exists or `renotify_after` has elapsed since the
//! last one. A still-open episode keeps extending its `end` and `peak`
//! silently inside the suppression window.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{DetectionRule, Severity, ViolationInterval};
use crate::time::Timestamp;

/// Emitted notification record.
#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub rule_id: String,
    pub metric_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    /// The violation was still in progress at the last evaluated sample.
    pub open: bool,
    pub peak_value: f64,
    pub threshold_at_peak: f64,
    pub severity: Severity,
    pub first_notified_at: Timestamp,
    pub notified_at: Timestamp,
    pub notify_count: u32,
}

impl Alert {
    pub fn duration_secs(&self, resolution_secs: i64) -> i64 {
        self.end - self.start + resolution_secs
    }
}

/// The episode a rule is currently tracking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeState {
    pub start: Timestamp,
    pub end: Timestamp,
    pub open: bool,
    pub peak_value: f64,
    pub threshold_at_peak: f64,
    pub first_notified_at: Option<Timestamp>,
    pub notify_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RuleState {
    pub last_notified_at: Option<Timestamp>,
    pub episode: Option<EpisodeState>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContainmentState {
    rules: BTreeMap<String, RuleState>,
}

impl ContainmentState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, rule_id: &str) -> Option<&RuleState> {
        self.rules.get(rule_id)
    }

    pub fn insert(&mut self, rule_id: impl Into<String>, state: RuleState) {
        self.rules.insert(rule_id.into(), state);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RuleState)> {
        self.rules.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// In-place form of [`apply_containment`]; returns the notification, if any.
    pub fn apply(
        &mut self,
        violations: &[ViolationInterval],
        rule: &DetectionRule,
        now: Timestamp,
    ) -> Option<Alert> {
        let latest = violations.iter().rev().find(|v| v.duration() >= rule.grace)?;
        let entry = self.rules.entry(rule.rule_id.clone()).or_default();
        let may_notify = entry
            .last_notified_at
            .is_none_or(|t| now - t >= rule.renotify_after.as_secs());
        let step = latest.resolution.as_secs();

        let episode = match entry.episode.as_mut() {
            Some(ep) if latest.end >= ep.start && latest.start <= ep.end + step => {
                ep.end = ep.end.max(latest.end);
                ep.open = latest.open;
                if latest.peak_value > ep.peak_value {
                    ep.peak_value = latest.peak_value;
                    ep.threshold_at_peak = latest.threshold_at_peak;
                }
                ep
            }
            // Older than the tracked episode: already handled.
            Some(ep) if latest.end < ep.start => return None,
            _ => entry.episode.insert(EpisodeState {
                start: latest.start,
                end: latest.end,
                open: latest.open,
                peak_value: latest.peak_value,
                threshold_at_peak: latest.threshold_at_peak,
                first_notified_at: None,
                notify_count: 0,
            }),
        };

        // Re-notification is for conditions that persist; a closed episode
        // is only ever reported once.
        if !may_notify || (episode.notify_count > 0 && !episode.open) {
            return None;
        }
        episode.notify_count += 1;
        let first = *episode.first_notified_at.get_or_insert(now);
        entry.last_notified_at = Some(now);
        Some(Alert {
            rule_id: rule.rule_id.clone(),
            metric_id: rule.target.clone(),
            start: episode.start,
            end: episode.end,
            open: episode.open,
            peak_value: episode.peak_value,
            threshold_at_peak: episode.threshold_at_peak,
            severity: rule.severity,
            first_notified_at: first,
            notified_at: now,
            notify_count: episode.notify_count,
        })
    }
}

/// Decide which of `violations` (sorted by start) to notify for `rule`.
///
/// Only violations lasting at least the rule's grace qualify, and at most
/// one notification per rule is produced per call.
pub fn apply_containment(
    violations: &[ViolationInterval],
    rule: &DetectionRule,
    state: &ContainmentState,
    now: Timestamp,
) -> (Vec<Alert>, ContainmentState) {
    let mut next = state.clone();
    let alerts = next.apply(violations, rule, now).into_iter().collect();
    (alerts, next)
}
