//! Weekly-seasonal baselines.
//!
//! A baseline partitions the week into slots of width `W` (keyed by
//! weekday, hour and minute window). For every slot it gathers the
//! smoothed values that fell into that slot during each of the previous
//! `N` weeks and keeps the median as the expected value and the sample
//! standard deviation as the dispersion. The alerting threshold of a
//! slot is `expected + c * deviation`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::{SmoothedSeries, DEFAULT_RESOLUTION, DEFAULT_WINDOW};
use crate::stats::{median_in_place, sample_std_dev};
use crate::time::{
    minute_of_week, Duration, Timestamp, MINUTES_PER_WEEK, SECS_PER_DAY, SECS_PER_HOUR,
    SECS_PER_MINUTE, SECS_PER_WEEK,
};

pub const DEFAULT_WEEKS_BACK: u32 = 8;
pub const DEFAULT_DEVIATION_MULTIPLIER: f64 = 3.0;

/// Slots holding fewer than `nominal / MIN_FILL_DIVISOR` values are invalid.
const MIN_FILL_DIVISOR: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineConfig {
    /// Number of previous weeks sampled per slot.
    pub weeks_back: u32,
    /// Smoothing window, also the slot width.
    pub window: Duration,
    pub resolution: Duration,
    /// Threshold width `c` in `expected + c * deviation`.
    pub deviation_multiplier: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            weeks_back: DEFAULT_WEEKS_BACK,
            window: DEFAULT_WINDOW,
            resolution: DEFAULT_RESOLUTION,
            deviation_multiplier: DEFAULT_DEVIATION_MULTIPLIER,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weeks_back < 1 {
            return Err(Error::InvalidConfig("weeks_back must be at least 1".into()));
        }
        if !self.resolution.is_positive() {
            return Err(Error::InvalidResolution);
        }
        if !self.window.is_multiple_of(self.resolution) {
            return Err(Error::InvalidWindow {
                window: self.window.as_secs(),
                resolution: self.resolution.as_secs(),
            });
        }
        let w = self.window.as_secs();
        if w % SECS_PER_MINUTE != 0 || MINUTES_PER_WEEK % (w / SECS_PER_MINUTE) != 0 {
            return Err(Error::WindowDoesNotDivideWeek(w));
        }
        if !(self.deviation_multiplier.is_finite() && self.deviation_multiplier > 0.0) {
            return Err(Error::InvalidConfig(
                "deviation_multiplier must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn slot_count(&self) -> usize {
        (SECS_PER_WEEK / self.window.as_secs()) as usize
    }

    /// Samples one slot can receive from one week.
    pub fn samples_per_week(&self) -> u64 {
        (self.window.as_secs() / self.resolution.as_secs()) as u64
    }

    /// Full slot sample size, `N * W / resolution`.
    pub fn nominal_sample_count(&self) -> u64 {
        self.weeks_back as u64 * self.samples_per_week()
    }
}

/// Position within the week at window granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeekSlot(usize);

impl WeekSlot {
    /// Slot containing `ts`; the minute of the week is floored to its window.
    pub fn containing(ts: Timestamp, window: Duration) -> Self {
        WeekSlot((minute_of_week(ts) / window.as_mins()) as usize)
    }

    pub fn from_index(index: usize) -> Self {
        WeekSlot(index)
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// `(weekday, hour, minute)` of the slot start; weekday 0 is Monday.
    pub fn start_of(self, window: Duration) -> (u8, u8, u8) {
        let secs = self.0 as i64 * window.as_secs();
        (
            (secs / SECS_PER_DAY) as u8,
            ((secs % SECS_PER_DAY) / SECS_PER_HOUR) as u8,
            ((secs % SECS_PER_HOUR) / SECS_PER_MINUTE) as u8,
        )
    }

    pub fn from_start(weekday: u8, hour: u8, minute: u8, window: Duration) -> Self {
        let minutes = weekday as i64 * 1440 + hour as i64 * 60 + minute as i64;
        WeekSlot((minutes / window.as_mins()) as usize)
    }
}

/// Statistics of one slot's sample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotStats {
    pub expected: f64,
    pub deviation: f64,
    pub sample_count: u64,
}

impl SlotStats {
    pub const EMPTY: SlotStats = SlotStats {
        expected: 0.0,
        deviation: 0.0,
        sample_count: 0,
    };

    /// Median and sample deviation of `values` (reordered in place).
    pub fn from_sample(values: &mut [f64]) -> SlotStats {
        match median_in_place(values) {
            None => SlotStats::EMPTY,
            Some(expected) => SlotStats {
                expected,
                deviation: sample_std_dev(values).unwrap_or(0.0),
                sample_count: values.len() as u64,
            },
        }
    }
}

/// Expected value and upper alerting bound at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub expected: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyBaseline {
    metric_id: String,
    config: BaselineConfig,
    slots: Vec<SlotStats>,
    built_at: Timestamp,
    weeks_used: u32,
}

impl WeeklyBaseline {
    /// Reassemble a baseline from stored parts, checking its invariants.
    pub fn from_parts(
        metric_id: impl Into<String>,
        config: BaselineConfig,
        slots: Vec<SlotStats>,
        built_at: Timestamp,
        weeks_used: u32,
    ) -> Result<Self> {
        config.validate()?;
        let metric_id = metric_id.into();
        if metric_id.is_empty() {
            return Err(Error::InvalidSeries("metric_id is empty"));
        }
        if slots.len() != config.slot_count() {
            return Err(Error::InvalidConfig(alloc::format!(
                "expected {} slots, found {}",
                config.slot_count(),
                slots.len()
            )));
        }
        if let Some(i) = slots.iter().position(|s| {
            !s.expected.is_finite() || !s.deviation.is_finite() || s.deviation < 0.0
        }) {
            return Err(Error::InvalidConfig(alloc::format!(
                "slot {i} has a non-finite expected value or negative deviation"
            )));
        }
        Ok(WeeklyBaseline {
            metric_id,
            config,
            slots,
            built_at,
            weeks_used,
        })
    }

    pub fn metric_id(&self) -> &str {
        &self.metric_id
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.config
    }

    pub fn built_at(&self) -> Timestamp {
        self.built_at
    }

    pub fn weeks_used(&self) -> u32 {
        self.weeks_used
    }

    pub fn slots(&self) -> &[SlotStats] {
        &self.slots
    }

    pub fn slot_of(&self, ts: Timestamp) -> WeekSlot {
        WeekSlot::containing(ts, self.config.window)
    }

    pub fn stats(&self, slot: WeekSlot) -> &SlotStats {
        &self.slots[slot.index()]
    }

    /// A slot is usable for detection when it holds at least a quarter of
    /// its nominal sample size.
    pub fn is_valid(&self, slot: WeekSlot) -> bool {
        let n = self.slots[slot.index()].sample_count;
        n > 0 && n * MIN_FILL_DIVISOR >= self.config.nominal_sample_count()
    }

    pub fn upper_threshold(&self, slot: WeekSlot) -> f64 {
        let s = &self.slots[slot.index()];
        s.expected + self.config.deviation_multiplier * s.deviation
    }

    /// Expected value and upper bound for the slot containing `ts`.
    pub fn threshold_at(&self, ts: Timestamp) -> Result<Threshold> {
        let slot = self.slot_of(ts);
        if !self.is_valid(slot) {
            return Err(Error::NoBaselineForSlot(slot.index()));
        }
        Ok(Threshold {
            expected: self.slots[slot.index()].expected,
            upper: self.upper_threshold(slot),
        })
    }

    /// Reject use with a detector running a different window or resolution.
    pub fn ensure_compatible(&self, window: Duration, resolution: Duration) -> Result<()> {
        let check = |field, found: Duration, expected: Duration| {
            if found == expected {
                Ok(())
            } else {
                Err(Error::IncompatibleBaseline {
                    metric: self.metric_id.clone(),
                    field,
                    found: found.as_secs(),
                    expected: expected.as_secs(),
                })
            }
        };
        check("window", self.config.window, window)?;
        check("resolution", self.config.resolution, resolution)
    }
}

/// The past values `(X[k - mT], ..., X[k - T])` for the `m = weeks_back`
/// previous weeks, oldest first. Missing timestamps are skipped.
pub fn history_vector(smoothed: &SmoothedSeries, k: Timestamp, config: &BaselineConfig) -> Vec<f64> {
    let series = smoothed.series();
    (1..=config.weeks_back as i64)
        .rev()
        .filter_map(|weeks| series.value_at(k - weeks * SECS_PER_WEEK))
        .collect()
}

/// Point forecast at `k`: the median of [`history_vector`].
pub fn point_forecast(smoothed: &SmoothedSeries, k: Timestamp, config: &BaselineConfig) -> Option<f64> {
    median_in_place(&mut history_vector(smoothed, k, config))
}

/// Build the baseline from the `weeks_back` weeks preceding `as_of`.
///
/// Every smoothed value with `as_of - N weeks <= ts < as_of` is grouped
/// into its week slot.
pub fn build_baseline(
    smoothed: &SmoothedSeries,
    as_of: Timestamp,
    config: &BaselineConfig,
) -> Result<WeeklyBaseline> {
    config.validate()?;
    let series = smoothed.series();
    if series.resolution() != config.resolution {
        return Err(Error::InvalidConfig(alloc::format!(
            "series resolution {} differs from configured {}",
            series.resolution(),
            config.resolution
        )));
    }
    if smoothed.window() != config.window {
        return Err(Error::InvalidConfig(alloc::format!(
            "series smoothed with window {} but baseline window is {}",
            smoothed.window(),
            config.window
        )));
    }

    let from = as_of - config.weeks_back as i64 * SECS_PER_WEEK;
    let history = series.window(from - 1, as_of - 1);
    if history.is_empty() {
        return Err(Error::InsufficientHistory);
    }

    let slot_count = config.slot_count();
    let per_slot = config.samples_per_week() as usize * config.weeks_back as usize;
    let mut groups: Vec<Vec<f64>> = (0..slot_count).map(|_| Vec::with_capacity(per_slot)).collect();
    let mut weeks_seen = alloc::vec![false; config.weeks_back as usize];
    for p in history {
        groups[WeekSlot::containing(p.ts, config.window).index()].push(p.value);
        weeks_seen[((as_of - 1 - p.ts) / SECS_PER_WEEK) as usize] = true;
    }

    let slots = groups
        .iter_mut()
        .map(|g| SlotStats::from_sample(g))
        .collect();
    Ok(WeeklyBaseline {
        metric_id: series.metric_id().into(),
        config: *config,
        slots,
        built_at: as_of,
        weeks_used: weeks_seen.iter().filter(|&&s| s).count() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{moving_average, MetricSeries, Sample};
    use alloc::vec;

    const MON: Timestamp = 1_704_067_200; // 2024-01-01, Monday
    const MIN: Duration = Duration::from_mins(1);

    fn cfg(weeks: u32, window_min: i64) -> BaselineConfig {
        BaselineConfig {
            weeks_back: weeks,
            window: Duration::from_mins(window_min),
            resolution: MIN,
            deviation_multiplier: 3.0,
        }
    }

    fn constant_smoothed(weeks: i64, value: f64, window: Duration) -> SmoothedSeries {
        let n = (weeks * MINUTES_PER_WEEK) as usize;
        let s = MetricSeries::from_values("m", MIN, MON, &vec![value; n]).unwrap();
        moving_average(&s, window).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(cfg(8, 10).validate().is_ok());
        assert!(cfg(0, 10).validate().is_err());
        assert!(cfg(1, 7).validate().is_ok());
        let mut c = cfg(1, 10);
        c.deviation_multiplier = 0.0;
        assert!(c.validate().is_err());
        assert!(cfg(1, 11).validate().is_err());
    }

    #[test]
    fn slots_are_bijective_with_weekday_hour_minute() {
        let w = Duration::from_mins(10);
        for i in 0..1008 {
            let slot = WeekSlot::from_index(i);
            let (d, h, m) = slot.start_of(w);
            assert_eq!(WeekSlot::from_start(d, h, m, w), slot);
            let ts = MON + i as i64 * 600 + 599;
            assert_eq!(WeekSlot::containing(ts, w), slot);
        }
    }

    #[test]
    fn constant_weeks_give_zero_deviation() {
        let c = cfg(2, 10);
        let sm = constant_smoothed(2, 100.0, c.window);
        let b = build_baseline(&sm, MON + 2 * SECS_PER_WEEK, &c).unwrap();
        assert_eq!(b.slots().len(), 1008);
        assert_eq!(b.weeks_used(), 2);
        for s in b.slots() {
            assert_eq!((s.expected, s.deviation, s.sample_count), (100.0, 0.0, 20));
        }
        let t = b.threshold_at(MON + 3 * SECS_PER_WEEK + 12_345).unwrap();
        assert_eq!((t.expected, t.upper), (100.0, 100.0));
    }

    #[test]
    fn threshold_arithmetic() {
        let mut slots = vec![SlotStats::EMPTY; 1008];
        slots[0] = SlotStats { expected: 100.0, deviation: 5.0, sample_count: 80 };
        let b = WeeklyBaseline::from_parts("m", cfg(8, 10), slots, MON, 8).unwrap();
        let t = b.threshold_at(MON).unwrap();
        assert_eq!((t.expected, t.upper), (100.0, 115.0));
        assert_eq!(b.threshold_at(MON + 600), Err(Error::NoBaselineForSlot(1)));
    }

    #[test]
    fn no_history_is_an_error() {
        let c = cfg(2, 10);
        let sm = constant_smoothed(1, 1.0, c.window);
        assert_eq!(build_baseline(&sm, MON, &c), Err(Error::InsufficientHistory));
    }

    #[test]
    fn sparse_slots_are_invalid() {
        // One week of data with N=8 fills 10 of 80 nominal values (< 25%).
        let c = cfg(8, 10);
        let sm = constant_smoothed(1, 3.0, c.window);
        let b = build_baseline(&sm, MON + SECS_PER_WEEK, &c).unwrap();
        assert_eq!(b.weeks_used(), 1);
        assert!(!b.is_valid(WeekSlot::from_index(0)));
        assert!(b.threshold_at(MON).is_err());
        // Two weeks reach exactly 25%.
        let sm = constant_smoothed(2, 3.0, c.window);
        let b = build_baseline(&sm, MON + 2 * SECS_PER_WEEK, &c).unwrap();
        assert!(b.is_valid(WeekSlot::from_index(0)));
    }

    #[test]
    fn history_vector_orders_oldest_first_and_skips_missing() {
        let c = cfg(3, 1);
        let k = MON + 3 * SECS_PER_WEEK + 600;
        let pts = vec![
            Sample::new(k - 3 * SECS_PER_WEEK, 1.0),
            Sample::new(k - SECS_PER_WEEK, 3.0),
        ];
        let s = MetricSeries::new("m", MIN, MON, pts).unwrap();
        let sm = moving_average(&s, MIN).unwrap();
        assert_eq!(history_vector(&sm, k, &c), vec![1.0, 3.0]);
        assert_eq!(point_forecast(&sm, k, &c), Some(2.0));
    }

    #[test]
    fn compatibility_check() {
        let b = WeeklyBaseline::from_parts("m", cfg(8, 10), vec![SlotStats::EMPTY; 1008], MON, 0)
            .unwrap();
        assert!(b.ensure_compatible(Duration::from_mins(10), MIN).is_ok());
        assert!(matches!(
            b.ensure_compatible(Duration::from_mins(5), MIN),
            Err(Error::IncompatibleBaseline { field: "window", .. })
        ));
    }

    #[test]
    fn window_mismatch_rejected() {
        let c = cfg(1, 10);
        let sm = constant_smoothed(1, 1.0, Duration::from_mins(5));
        assert!(build_baseline(&sm, MON + SECS_PER_WEEK, &c).is_err());
    }
}
