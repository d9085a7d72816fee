//! Baseline statistics against a brute-force grouping oracle.

use std::collections::BTreeMap;

use netwatch_core::baseline::{build_baseline, BaselineConfig, WeekSlot};
use netwatch_core::series::{moving_average, regularize, Aggregation, GapPolicy, MetricSeries, Sample};
use netwatch_core::stats::median_in_place;
use netwatch_core::Duration;
use proptest::prelude::*;

const MIN: Duration = Duration::from_mins(1);
const WEEK: i64 = 7 * 86_400;
// 2024-01-01 00:00 UTC, a Monday.
const MON: i64 = 1_704_067_200;

fn config(weeks: u32, window_min: i64) -> BaselineConfig {
    BaselineConfig {
        weeks_back: weeks,
        window: Duration::from_mins(window_min),
        resolution: MIN,
        deviation_multiplier: 3.0,
    }
}

/// Slot index from calendar fields; 1970-01-01 was a Thursday.
fn oracle_slot(ts: i64, window_min: i64) -> usize {
    let day = ts.div_euclid(86_400);
    let weekday = (day + 3).rem_euclid(7);
    let hour = ts.rem_euclid(86_400) / 3_600;
    let minute = ts.rem_euclid(3_600) / 60;
    ((weekday * 1440 + hour * 60 + minute) / window_min) as usize
}

fn oracle_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Welford running variance.
fn oracle_std(values: &[f64]) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n < 2.0 {
        0.0
    } else {
        (m2 / (n - 1.0)).sqrt()
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(f64::MIN_POSITIVE)
}

fn sparse_series(minutes: &[(u32, f64)]) -> MetricSeries {
    let mut pts: BTreeMap<i64, f64> = BTreeMap::new();
    for &(m, v) in minutes {
        pts.insert(MON + 60 * m as i64, v);
    }
    let points = pts.into_iter().map(|(t, v)| Sample::new(t, v)).collect();
    MetricSeries::new("m", MIN, MON, points).unwrap()
}

fn instance() -> impl Strategy<Value = (u32, i64, Vec<(u32, f64)>)> {
    (prop::sample::select(vec![2u32, 4, 8]), prop::sample::select(vec![2i64, 10])).prop_flat_map(
        |(n, w)| {
            let span = n * 10_080;
            let pts = prop::collection::vec((0..span, 0.0f64..1000.0), 1..20_160);
            (Just(n), Just(w), pts)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slot_stats_match_brute_force((n, w, pts) in instance()) {
        let cfg = config(n, w);
        let smoothed = moving_average(&sparse_series(&pts), cfg.window).unwrap();
        let as_of = MON + n as i64 * WEEK;
        let b = build_baseline(&smoothed, as_of, &cfg).unwrap();

        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for p in smoothed.series().points() {
            groups.entry(oracle_slot(p.ts, w)).or_default().push(p.value);
        }
        prop_assert_eq!(b.slots().len(), (10_080 / w) as usize);
        for (i, s) in b.slots().iter().enumerate() {
            match groups.get(&i) {
                None => prop_assert_eq!(s.sample_count, 0),
                Some(vals) => {
                    prop_assert_eq!(s.sample_count, vals.len() as u64);
                    prop_assert!(vals.len() as u64 <= cfg.nominal_sample_count());
                    prop_assert_eq!(s.expected, oracle_median(vals));
                    prop_assert!(rel_close(s.deviation, oracle_std(vals)),
                        "slot {}: {} vs {}", i, s.deviation, oracle_std(vals));
                }
            }
        }
    }

    #[test]
    fn slot_stats_ignore_record_order(
        raw in prop::collection::vec((0i64..2 * WEEK, 0.0f64..100.0), 1..3_000),
    ) {
        let cfg = config(2, 10);
        let build = |r: Vec<(i64, f64)>| {
            let r = r.into_iter().map(|(t, v)| (MON + t, v));
            let s = regularize("m", r, MIN, GapPolicy::LeaveGap, Aggregation::Sum).unwrap();
            let sm = moving_average(&s, cfg.window).unwrap();
            build_baseline(&sm, MON + 2 * WEEK, &cfg).unwrap()
        };
        let mut reversed = raw.clone();
        reversed.reverse();
        prop_assert_eq!(build(raw), build(reversed));
    }

    #[test]
    fn constant_shift_moves_medians_exactly(
        vals in prop::collection::vec(-10_000i32..10_000, 2 * 10_080),
        d in -100_000i32..100_000,
    ) {
        // W = resolution makes smoothing the identity, so the shift reaches slots intact.
        let cfg = config(2, 1);
        let build = |shift: i32| {
            let v: Vec<f64> = vals.iter().map(|&x| (x + shift) as f64).collect();
            let s = MetricSeries::from_values("m", MIN, MON, &v).unwrap();
            build_baseline(&moving_average(&s, MIN).unwrap(), MON + 2 * WEEK, &cfg).unwrap()
        };
        let (a, b) = (build(0), build(d));
        for (x, y) in a.slots().iter().zip(b.slots()) {
            prop_assert_eq!(y.expected, x.expected + d as f64);
            prop_assert!((y.deviation - x.deviation).abs() <= 1e-9 * x.deviation.max(1.0));
        }
    }

    #[test]
    fn median_survives_minority_contamination(
        clean in prop::collection::vec(-1e3f64..1e3, 1..80),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 40),
    ) {
        let n = clean.len();
        let lo = clean.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = clean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sample = clean.clone();
        for idx in picks.iter().take((n - 1) / 2) {
            let i = idx.index(n);
            sample[i] = clean[i].abs().max(1.0) * 1e6;
        }
        let m = median_in_place(&mut sample).unwrap();
        prop_assert!(lo <= m && m <= hi, "median {} outside [{}, {}]", m, lo, hi);
    }
}

#[test]
fn oracle_slot_agrees_with_week_slot_on_a_full_week() {
    let w = Duration::from_mins(10);
    for m in 0..10_080 {
        let ts = MON + 5 * WEEK + 60 * m;
        assert_eq!(WeekSlot::containing(ts, w).index(), oracle_slot(ts, 10));
    }
}
