use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baseline::WeeklyBaseline;
use crate::series::MetricSeries;
use crate::time::Timestamp;

/// Boolean condition evaluated at each sample instant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Predicate {
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Leaf(Leaf),
}

/// `measure(metric) op reference` at one instant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Leaf {
    pub metric: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub measure: Measure,
    pub op: Comparison,
    pub against: Reference,
}

/// Named function of the sample that a leaf compares.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Measure {
    /// The sample itself.
    #[default]
    Value,
    /// Change since the previous grid sample.
    RateOfChange,
    /// Sample divided by the same-instant sample of another metric.
    Ratio { denominator: String },
    /// `|sample - baseline expected|`.
    AbsDeviationFromExpected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Comparison {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

impl Comparison {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Gt => lhs > rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Reference {
    /// `expected + c * deviation` of the leaf metric's baseline slot.
    BaselineUpper,
    Static(f64),
    Zero,
}

impl Leaf {
    pub fn new(metric: impl Into<String>, op: Comparison, against: Reference) -> Self {
        Leaf {
            metric: metric.into(),
            measure: Measure::Value,
            op,
            against,
        }
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    fn needs_baseline(&self) -> bool {
        matches!(self.against, Reference::BaselineUpper)
            || matches!(self.measure, Measure::AbsDeviationFromExpected)
    }
}

impl Predicate {
    pub fn leaf(metric: impl Into<String>, op: Comparison, against: Reference) -> Self {
        Predicate::Leaf(Leaf::new(metric, op, against))
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Predicate::Leaf(l) => out.push(l),
            Predicate::And(ps) | Predicate::Or(ps) => {
                ps.iter().for_each(|p| p.collect_leaves(out))
            }
        }
    }

    /// Every metric the predicate reads, including ratio denominators.
    pub fn metrics(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for l in self.leaves() {
            out.insert(l.metric.as_str());
            if let Measure::Ratio { denominator } = &l.measure {
                out.insert(denominator.as_str());
            }
        }
        out
    }

    /// Metrics whose baseline the predicate consults.
    pub fn baseline_metrics(&self) -> BTreeSet<&str> {
        self.leaves()
            .into_iter()
            .filter(|l| l.needs_baseline())
            .map(|l| l.metric.as_str())
            .collect()
    }

    /// First structural problem, if any: empty connectives or metric names.
    pub fn structural_error(&self) -> Option<&'static str> {
        match self {
            Predicate::And(ps) | Predicate::Or(ps) => {
                if ps.is_empty() {
                    Some("empty and/or node")
                } else {
                    ps.iter().find_map(|p| p.structural_error())
                }
            }
            Predicate::Leaf(l) => {
                if l.metric.is_empty() {
                    Some("leaf with empty metric name")
                } else if let Reference::Static(v) = l.against {
                    (!v.is_finite()).then_some("non-finite static threshold")
                } else {
                    None
                }
            }
        }
    }
}

/// Resolved inputs for evaluating a predicate at arbitrary instants.
pub(crate) struct Bindings<'a> {
    pub series: Vec<(&'a str, &'a MetricSeries)>,
    pub baselines: Vec<(&'a str, &'a WeeklyBaseline)>,
}

/// Left- and right-hand side of one leaf at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Observation {
    pub value: f64,
    pub threshold: f64,
}

impl<'a> Bindings<'a> {
    fn series(&self, metric: &str) -> Option<&'a MetricSeries> {
        self.series.iter().find(|(m, _)| *m == metric).map(|(_, s)| *s)
    }

    fn baseline(&self, metric: &str) -> Option<&'a WeeklyBaseline> {
        self.baselines.iter().find(|(m, _)| *m == metric).map(|(_, b)| *b)
    }

    /// Both sides of `leaf` at `ts`, or `None` when either is undefined
    /// (missing sample, zero denominator, invalid baseline slot).
    pub fn observe(&self, leaf: &Leaf, ts: Timestamp) -> Option<Observation> {
        let series = self.series(&leaf.metric)?;
        let x = series.value_at(ts)?;
        let value = match &leaf.measure {
            Measure::Value => x,
            Measure::RateOfChange => x - series.value_at(ts - series.resolution().as_secs())?,
            Measure::Ratio { denominator } => {
                let d = self.series(denominator)?.value_at(ts)?;
                if d == 0.0 {
                    return None;
                }
                x / d
            }
            Measure::AbsDeviationFromExpected => {
                (x - self.baseline(&leaf.metric)?.threshold_at(ts).ok()?.expected).abs()
            }
        };
        let threshold = match leaf.against {
            Reference::BaselineUpper => self.baseline(&leaf.metric)?.threshold_at(ts).ok()?.upper,
            Reference::Static(c) => c,
            Reference::Zero => 0.0,
        };
        Some(Observation { value, threshold })
    }

    pub fn holds(&self, predicate: &Predicate, ts: Timestamp) -> bool {
        match predicate {
            Predicate::And(ps) => ps.iter().all(|p| self.holds(p, ts)),
            Predicate::Or(ps) => ps.iter().any(|p| self.holds(p, ts)),
            Predicate::Leaf(l) => self
                .observe(l, ts)
                .is_some_and(|o| l.op.holds(o.value, o.threshold)),
        }
    }
}
