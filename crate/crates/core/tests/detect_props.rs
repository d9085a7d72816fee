use std::collections::BTreeMap;

use netwatch_core::detect::{
    evaluate_rule, run_detection_cycle, Comparison, ContainmentState, DetectionRule, Predicate,
    Reference,
};
use netwatch_core::series::MetricSeries;
use netwatch_core::Duration;
use proptest::prelude::*;

const MIN: Duration = Duration::from_mins(1);
const T0: i64 = 1_704_067_200;

fn source(values: &[f64]) -> BTreeMap<String, MetricSeries> {
    let mut m = BTreeMap::new();
    m.insert("m".to_string(), MetricSeries::from_values("m", MIN, T0, values).unwrap());
    m
}

fn rule(threshold: f64, grace_min: i64, renotify_min: i64) -> DetectionRule {
    let mut r = DetectionRule::new("r", "m", Predicate::leaf("m", Comparison::Gt, Reference::Static(threshold)));
    r.grace = Duration::from_mins(grace_min);
    r.renotify_after = Duration::from_mins(renotify_min.max(grace_min));
    r
}

/// Maximal runs of `v > t` with at least `min_len` samples, as index pairs.
fn oracle_runs(values: &[f64], t: f64, min_len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i] > t {
            let s = i;
            while i < values.len() && values[i] > t {
                i += 1;
            }
            if i - s >= min_len {
                out.push((s, i - 1));
            }
        } else {
            i += 1;
        }
    }
    out
}

proptest! {
    #[test]
    fn intervals_equal_long_enough_runs(
        values in prop::collection::vec(0.0f64..10.0, 60),
        t in 0.0f64..10.0,
        grace in 1i64..20,
    ) {
        let now = T0 + 59 * 60;
        let eval = evaluate_rule(&rule(t, grace, 60), &source(&values), &BTreeMap::new(), now).unwrap();
        let got: Vec<(i64, i64)> = eval.intervals.iter().map(|v| (v.start, v.end)).collect();
        let want: Vec<(i64, i64)> = oracle_runs(&values, t, grace as usize)
            .into_iter()
            .map(|(s, e)| (T0 + 60 * s as i64, T0 + 60 * e as i64))
            .collect();
        prop_assert_eq!(got, want);
        prop_assert!(eval.intervals.iter().all(|v| v.duration() >= Duration::from_mins(grace)));
        prop_assert_eq!(eval.elements, 60);
    }

    #[test]
    fn raising_the_threshold_never_adds_violations(
        values in prop::collection::vec(0.0f64..10.0, 60),
        t1 in 0.0f64..10.0,
        bump in 0.0f64..5.0,
        grace in 1i64..10,
    ) {
        let now = T0 + 59 * 60;
        let src = source(&values);
        let low = evaluate_rule(&rule(t1, grace, 60), &src, &BTreeMap::new(), now).unwrap().intervals;
        let high = evaluate_rule(&rule(t1 + bump, grace, 60), &src, &BTreeMap::new(), now).unwrap().intervals;
        for h in &high {
            prop_assert!(low.iter().any(|l| l.start <= h.start && h.end <= l.end));
        }
    }

    #[test]
    fn notifications_respect_spacing_and_grace(
        hot in prop::collection::vec(prop::bool::weighted(0.85), 600),
        grace in 1i64..15,
        renotify in 1i64..120,
        cycle in prop::sample::select(vec![1i64, 5, 10]),
    ) {
        let values: Vec<f64> = hot.iter().map(|&h| if h { 10.0 } else { 0.0 }).collect();
        let src = source(&values);
        let rules = [rule(5.0, grace, renotify)];
        let spacing = rules[0].renotify_after.as_secs();
        let run = || {
            let mut state = ContainmentState::new();
            let mut notified = Vec::new();
            let mut now = T0 + 59 * 60;
            while now < T0 + 600 * 60 {
                let out = run_detection_cycle(&rules, &src, &BTreeMap::new(), &mut state, now);
                for a in out.alerts {
                    assert!(a.duration_secs(60) >= grace * 60);
                    notified.push((a.notified_at, a.start, a.end, a.notify_count));
                }
                now += cycle * 60;
            }
            notified
        };
        let first = run();
        for w in first.windows(2) {
            prop_assert!(w[1].0 - w[0].0 >= spacing, "{:?}", w);
        }
        prop_assert_eq!(first, run());
    }
}
