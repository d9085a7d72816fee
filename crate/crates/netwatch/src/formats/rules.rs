//! Rules file (TOML).
//!
//! ```toml
//! [[rule]]
//! id = "flows_in_high"
//! target = "flows_in"          # defaults to the first leaf's metric
//! smoothing_min = 10           # optional moving average before evaluation
//! grace_min = 10               # optional, engine default otherwise
//! lookback_min = 60
//! renotify_min = 60
//! severity = "warning"         # info | warning | critical
//! condition = { leaf = { metric = "flows_in", op = "gt", against = "baseline_upper" } }
//!
//! [[rule]]
//! id = "outage"
//! condition = { and = [
//!   { leaf = { metric = "flows_in", op = "gt", against = "baseline_upper" } },
//!   { leaf = { metric = "flows_out", op = "eq", against = "zero" } },
//! ] }
//! ```
//!
//! Leaves may add `measure = "rate_of_change"`,
//! `measure = "abs_deviation_from_expected"` or
//! `measure = { ratio = { denominator = "other_metric" } }`, and compare
//! against `{ static = 5.0 }`.

use std::collections::BTreeSet;
use std::path::Path;

use netwatch_core::detect::{DetectionRule, Predicate, Severity};
use netwatch_core::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

/// Values for fields a rule leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleDefaults {
    pub grace: Duration,
    pub lookback: Duration,
    pub renotify_after: Duration,
}

impl Default for RuleDefaults {
    fn default() -> Self {
        use netwatch_core::detect::{DEFAULT_GRACE, DEFAULT_LOOKBACK, DEFAULT_RENOTIFY_AFTER};
        RuleDefaults {
            grace: DEFAULT_GRACE,
            lookback: DEFAULT_LOOKBACK,
            renotify_after: DEFAULT_RENOTIFY_AFTER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grace_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renotify_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<String>,
    pub condition: Predicate,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RulesFile {
    #[serde(default)]
    rule: Vec<RuleEntry>,
}

impl RuleEntry {
    pub fn into_rule(self, defaults: &RuleDefaults) -> std::result::Result<DetectionRule, String> {
        if self.id.is_empty() || self.id.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(format!("rule id {:?} must be non-empty without whitespace", self.id));
        }
        let target = match self.target {
            Some(t) => t,
            None => self
                .condition
                .leaves()
                .first()
                .map(|l| l.metric.clone())
                .ok_or_else(|| format!("rule {} has an empty condition", self.id))?,
        };
        let severity = match self.severity.as_deref() {
            None => Severity::default(),
            Some(s) => Severity::parse(s).ok_or_else(|| format!("rule {}: unknown severity {s:?}", self.id))?,
        };
        let mins = |v: Option<i64>, d: Duration| v.map_or(d, Duration::from_mins);
        let mut rule = DetectionRule::new(self.id, target, self.condition);
        rule.grace = mins(self.grace_min, defaults.grace);
        rule.lookback = mins(self.lookback_min, defaults.lookback);
        rule.renotify_after = mins(self.renotify_min, defaults.renotify_after);
        rule.severity = severity;
        rule.smoothing = self.smoothing_min.map(Duration::from_mins);
        Ok(rule)
    }

    pub fn from_rule(rule: &DetectionRule) -> Self {
        RuleEntry {
            id: rule.rule_id.clone(),
            target: Some(rule.target.clone()),
            smoothing_min: rule.smoothing.map(Duration::as_mins),
            grace_min: Some(rule.grace.as_mins()),
            lookback_min: Some(rule.lookback.as_mins()),
            renotify_min: Some(rule.renotify_after.as_mins()),
            severity: Some(rule.severity.as_str().into()),
            condition: rule.condition.clone(),
        }
    }
}

pub fn parse_rules(text: &str, path: &Path, defaults: &RuleDefaults) -> Result<Vec<DetectionRule>> {
    let file: RulesFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() + 1);
        Error::parse(path, line, e.message().to_string())
    })?;
    let mut seen = BTreeSet::new();
    let mut rules = Vec::with_capacity(file.rule.len());
    for entry in file.rule {
        if !seen.insert(entry.id.clone()) {
            return Err(Error::Config(format!("{}: duplicate rule id {:?}", path.display(), entry.id)));
        }
        rules.push(entry.into_rule(defaults).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
    }
    Ok(rules)
}

pub fn load_rules(path: &Path, defaults: &RuleDefaults) -> Result<Vec<DetectionRule>> {
    parse_rules(&read_to_string(path)?, path, defaults)
}

pub fn rules_to_toml(rules: &[DetectionRule]) -> String {
    let file = RulesFile {
        rule: rules.iter().map(RuleEntry::from_rule).collect(),
    };
    toml::to_string(&file).expect("rules serialize")
}
