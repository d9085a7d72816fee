use netwatch_core::series::{moving_average, regularize, Aggregation, GapPolicy, MetricSeries, Sample};
use netwatch_core::Duration;
use proptest::prelude::*;

const MIN: Duration = Duration::from_mins(1);
const T0: i64 = 1_704_067_200;

fn gappy_series(values: &[f64], keep: &[bool]) -> MetricSeries {
    let points = values
        .iter()
        .zip(keep)
        .enumerate()
        .filter(|(_, (_, &k))| k)
        .map(|(i, (&v, _))| Sample::new(T0 + 60 * i as i64, v))
        .collect();
    MetricSeries::new("m", MIN, T0, points).unwrap()
}

proptest! {
    #[test]
    fn constant_series_is_a_fixed_point(c in -1e9f64..1e9, n in 1usize..400, w in 1i64..30) {
        let s = MetricSeries::from_values("m", MIN, T0, &vec![c; n]).unwrap();
        let out = moving_average(&s, Duration::from_mins(w)).unwrap();
        prop_assert!(out.series().values().all(|v| v == c));
    }

    #[test]
    fn smoothing_stays_within_bounds_and_keeps_the_grid(
        values in prop::collection::vec(-1e6f64..1e6, 1..300),
        keep_seed in prop::collection::vec(any::<bool>(), 300),
        w in 1i64..40,
    ) {
        let mut keep = keep_seed[..values.len()].to_vec();
        keep[0] = true;
        let s = gappy_series(&values, &keep);
        let out = moving_average(&s, Duration::from_mins(w)).unwrap();
        let lo = s.values().fold(f64::INFINITY, f64::min);
        let hi = s.values().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(out.series().len(), s.len());
        for (a, b) in out.series().points().iter().zip(s.points()) {
            prop_assert_eq!(a.ts, b.ts);
            prop_assert!(lo <= a.value && a.value <= hi, "{} outside [{}, {}]", a.value, lo, hi);
        }
    }

    #[test]
    fn regularize_conserves_mass(
        raw in prop::collection::vec((0i64..50_000, -1000i32..1000), 1..500),
        fill in any::<bool>(),
    ) {
        let raw: Vec<(i64, f64)> = raw.into_iter().map(|(t, v)| (T0 + t, v as f64)).collect();
        let gaps = if fill { GapPolicy::FillZero } else { GapPolicy::LeaveGap };
        let s = regularize("m", raw.clone(), MIN, gaps, Aggregation::Sum).unwrap();
        let want: f64 = raw.iter().map(|p| p.1).sum();
        prop_assert_eq!(s.values().sum::<f64>(), want);
        prop_assert!(s.points().iter().all(|p| p.ts % 60 == 0));
    }

    #[test]
    fn regularize_ignores_input_order(
        raw in prop::collection::vec((0i64..5_000, -1e3f64..1e3), 1..300),
        seed in any::<u64>(),
    ) {
        let mut shuffled = raw.clone();
        // Deterministic Fisher-Yates driven by a splitmix step.
        let mut x = seed;
        for i in (1..shuffled.len()).rev() {
            x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            shuffled.swap(i, (z % (i as u64 + 1)) as usize);
        }
        let a = regularize("m", raw, MIN, GapPolicy::LeaveGap, Aggregation::Sum).unwrap();
        let b = regularize("m", shuffled, MIN, GapPolicy::LeaveGap, Aggregation::Sum).unwrap();
        prop_assert_eq!(a, b);
    }
}
