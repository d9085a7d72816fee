//! Regularly sampled metric series and trailing moving-window smoothing.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::time::{align_down, Duration, Timestamp};

/// Default smoothing window.
pub const DEFAULT_WINDOW: Duration = Duration::from_mins(10);

/// Default sampling resolution.
pub const DEFAULT_RESOLUTION: Duration = Duration::from_mins(1);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub ts: Timestamp,
    pub value: f64,
}

impl Sample {
    pub const fn new(ts: Timestamp, value: f64) -> Self {
        Sample { ts, value }
    }
}

/// How empty buckets between the first and last observation are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GapPolicy {
    #[default]
    LeaveGap,
    FillZero,
    FillPrevious,
}

/// How several raw points in one bucket are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Aggregation {
    /// Counters (flows, visits): bucket values add up.
    #[default]
    Sum,
    /// Gauges: bucket value is the mean of its points.
    Mean,
}

/// A metric sampled on a fixed grid, gaps allowed.
///
/// Every timestamp is `start + i * resolution` for some `i >= 0` and
/// timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    metric_id: String,
    resolution: Duration,
    start: Timestamp,
    points: Vec<Sample>,
}

impl MetricSeries {
    pub fn new(
        metric_id: impl Into<String>,
        resolution: Duration,
        start: Timestamp,
        points: Vec<Sample>,
    ) -> Result<Self> {
        let metric_id = metric_id.into();
        if metric_id.is_empty() {
            return Err(Error::InvalidSeries("metric_id is empty"));
        }
        if !resolution.is_positive() {
            return Err(Error::InvalidResolution);
        }
        let step = resolution.as_secs();
        for (i, p) in points.iter().enumerate() {
            if (p.ts - start).rem_euclid(step) != 0 || p.ts < start {
                return Err(Error::InvalidSeries("timestamp off the resolution grid"));
            }
            if i > 0 && points[i - 1].ts >= p.ts {
                return Err(Error::InvalidSeries("timestamps not strictly increasing"));
            }
        }
        Ok(MetricSeries {
            metric_id,
            resolution,
            start,
            points,
        })
    }

    /// Contiguous series of `values` starting at `start`.
    pub fn from_values(
        metric_id: impl Into<String>,
        resolution: Duration,
        start: Timestamp,
        values: &[f64],
    ) -> Result<Self> {
        let step = resolution.as_secs();
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample::new(start + i as i64 * step, v))
            .collect();
        Self::new(metric_id, resolution, start, points)
    }

    pub fn metric_id(&self) -> &str {
        &self.metric_id
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn points(&self) -> &[Sample] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_ts(&self) -> Option<Timestamp> {
        self.points.first().map(|p| p.ts)
    }

    pub fn last_ts(&self) -> Option<Timestamp> {
        self.points.last().map(|p| p.ts)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    pub fn value_at(&self, ts: Timestamp) -> Option<f64> {
        self.points
            .binary_search_by_key(&ts, |p| p.ts)
            .ok()
            .map(|i| self.points[i].value)
    }

    /// Samples with `from < ts <= to`.
    pub fn window(&self, from: Timestamp, to: Timestamp) -> &[Sample] {
        let lo = self.points.partition_point(|p| p.ts <= from);
        let hi = self.points.partition_point(|p| p.ts <= to);
        &self.points[lo..hi.max(lo)]
    }

    /// Owned copy of [`MetricSeries::window`] on the same grid.
    pub fn slice(&self, from: Timestamp, to: Timestamp) -> MetricSeries {
        MetricSeries {
            metric_id: self.metric_id.clone(),
            resolution: self.resolution,
            start: self.start,
            points: self.window(from, to).to_vec(),
        }
    }

    /// `true` when both series sit on the same time grid.
    pub fn same_grid(&self, other: &MetricSeries) -> bool {
        let step = self.resolution.as_secs();
        self.resolution == other.resolution
            && (self.start - other.start).rem_euclid(step) == 0
    }

    pub fn into_points(self) -> Vec<Sample> {
        self.points
    }
}

/// Output of [`moving_average`]: same grid as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSeries {
    window: Duration,
    series: MetricSeries,
}

impl SmoothedSeries {
    pub fn source(&self) -> &str {
        self.series.metric_id()
    }

    pub fn window(&self) -> Duration {
        self.window
    }

    pub fn series(&self) -> &MetricSeries {
        &self.series
    }

    pub fn into_series(self) -> MetricSeries {
        self.series
    }
}

/// Bucket unordered raw points onto a `resolution` grid.
///
/// Buckets are epoch-aligned. Points sharing a bucket are combined per
/// `aggregation`; empty buckets between the first and last observation
/// follow `gaps`.
pub fn regularize<I>(
    metric_id: &str,
    raw: I,
    resolution: Duration,
    gaps: GapPolicy,
    aggregation: Aggregation,
) -> Result<MetricSeries>
where
    I: IntoIterator<Item = (Timestamp, f64)>,
{
    if !resolution.is_positive() {
        return Err(Error::InvalidResolution);
    }
    let mut raw: Vec<(Timestamp, f64)> = raw.into_iter().collect();
    if raw.is_empty() {
        return Err(Error::NoData);
    }
    if let Some(&(ts, _)) = raw.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(ts));
    }
    for p in raw.iter_mut() {
        p.0 = align_down(p.0, resolution);
    }
    // Full ordering so bucket sums do not depend on input order.
    raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let step = resolution.as_secs();
    let start = raw[0].0;
    let mut points: Vec<Sample> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let bucket = raw[i].0;
        let mut sum = 0.0;
        let mut n = 0usize;
        while i < raw.len() && raw[i].0 == bucket {
            sum += raw[i].1;
            n += 1;
            i += 1;
        }
        let value = match aggregation {
            Aggregation::Sum => sum,
            Aggregation::Mean => sum / n as f64,
        };
        if let Some(prev) = points.last().copied() {
            let mut t = prev.ts + step;
            while t < bucket {
                match gaps {
                    GapPolicy::LeaveGap => break,
                    GapPolicy::FillZero => points.push(Sample::new(t, 0.0)),
                    GapPolicy::FillPrevious => points.push(Sample::new(t, prev.value)),
                }
                t += step;
            }
        }
        points.push(Sample::new(bucket, value));
    }
    MetricSeries::new(metric_id, resolution, start, points)
}

/// Trailing moving average over `window`.
///
/// The value at `t` is the mean of the samples in `(t - window, t]`.
/// Head positions with fewer samples use whatever is available and gap
/// buckets are simply absent from the mean.
pub fn moving_average(series: &MetricSeries, window: Duration) -> Result<SmoothedSeries> {
    let resolution = series.resolution();
    if !window.is_multiple_of(resolution) {
        return Err(Error::InvalidWindow {
            window: window.as_secs(),
            resolution: resolution.as_secs(),
        });
    }
    let pts = series.points();
    let w = window.as_secs();
    let mut out = Vec::with_capacity(pts.len());
    let mut lo = 0;
    for (hi, p) in pts.iter().enumerate() {
        while pts[lo].ts <= p.ts - w {
            lo += 1;
        }
        out.push(Sample::new(p.ts, window_mean(&pts[lo..=hi])));
    }
    Ok(SmoothedSeries {
        window,
        series: MetricSeries {
            metric_id: series.metric_id.clone(),
            resolution,
            start: series.start,
            points: out,
        },
    })
}

// Mean as `min + mean(x - min)`, clamped to the sample range, so constant
// windows reproduce their value exactly and rounding never leaves [min, max].
fn window_mean(window: &[Sample]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in window {
        lo = lo.min(s.value);
        hi = hi.max(s.value);
    }
    let excess: f64 = window.iter().map(|s| s.value - lo).sum();
    (lo + excess / window.len() as f64).clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const MIN: Duration = Duration::from_mins(1);

    fn pairs(s: &MetricSeries) -> Vec<(i64, f64)> {
        s.points().iter().map(|p| (p.ts, p.value)).collect()
    }

    #[test]
    fn regularize_sums_buckets() {
        let s = regularize(
            "m",
            vec![(0, 1.0), (30, 2.0), (90, 4.0)],
            MIN,
            GapPolicy::FillZero,
            Aggregation::Sum,
        )
        .unwrap();
        assert_eq!(pairs(&s), vec![(0, 3.0), (60, 4.0)]);
    }

    #[test]
    fn regularize_single_point() {
        let s = regularize("m", vec![(0, 7.0)], MIN, GapPolicy::LeaveGap, Aggregation::Sum)
            .unwrap();
        assert_eq!(pairs(&s), vec![(0, 7.0)]);
    }

    #[test]
    fn regularize_gap_policies() {
        let raw = vec![(180, 9.0), (0, 2.0)];
        let zero =
            regularize("m", raw.clone(), MIN, GapPolicy::FillZero, Aggregation::Sum).unwrap();
        assert_eq!(pairs(&zero), vec![(0, 2.0), (60, 0.0), (120, 0.0), (180, 9.0)]);
        let prev =
            regularize("m", raw.clone(), MIN, GapPolicy::FillPrevious, Aggregation::Sum).unwrap();
        assert_eq!(pairs(&prev), vec![(0, 2.0), (60, 2.0), (120, 2.0), (180, 9.0)]);
        let gap = regularize("m", raw, MIN, GapPolicy::LeaveGap, Aggregation::Sum).unwrap();
        assert_eq!(pairs(&gap), vec![(0, 2.0), (180, 9.0)]);
    }

    #[test]
    fn regularize_mean_aggregation() {
        let s = regularize(
            "cpu",
            vec![(0, 1.0), (10, 3.0), (70, 5.0)],
            MIN,
            GapPolicy::LeaveGap,
            Aggregation::Mean,
        )
        .unwrap();
        assert_eq!(pairs(&s), vec![(0, 2.0), (60, 5.0)]);
    }

    #[test]
    fn regularize_errors() {
        let none: Vec<(i64, f64)> = vec![];
        assert_eq!(
            regularize("m", none, MIN, GapPolicy::LeaveGap, Aggregation::Sum),
            Err(Error::NoData)
        );
        assert_eq!(
            regularize("m", vec![(0, 1.0), (120, f64::NAN)], MIN, GapPolicy::LeaveGap, Aggregation::Sum),
            Err(Error::NonFinite(120))
        );
        assert_eq!(
            regularize("m", vec![(0, 1.0)], Duration::ZERO, GapPolicy::LeaveGap, Aggregation::Sum),
            Err(Error::InvalidResolution)
        );
    }

    #[test]
    fn moving_average_trailing_means() {
        let s = MetricSeries::from_values("m", MIN, 0, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let sm = moving_average(&s, Duration::from_mins(2)).unwrap();
        assert_eq!(sm.series().values().collect::<Vec<_>>(), vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(sm.window(), Duration::from_mins(2));
        assert_eq!(sm.source(), "m");
    }

    #[test]
    fn moving_average_skips_gaps() {
        let s = MetricSeries::new(
            "m",
            MIN,
            0,
            vec![Sample::new(0, 2.0), Sample::new(180, 4.0), Sample::new(240, 6.0)],
        )
        .unwrap();
        let sm = moving_average(&s, Duration::from_mins(3)).unwrap();
        // (−180,0] → {2}; (0,180] → {4}; (60,240] → {4,6}
        assert_eq!(sm.series().values().collect::<Vec<_>>(), vec![2.0, 4.0, 5.0]);
    }

    #[test]
    fn moving_average_constant_exact() {
        let s = MetricSeries::from_values("m", MIN, 0, &[0.1; 50]).unwrap();
        let sm = moving_average(&s, DEFAULT_WINDOW).unwrap();
        assert!(sm.series().values().all(|v| v == 0.1));
    }

    #[test]
    fn moving_average_rejects_bad_windows() {
        let s = MetricSeries::from_values("m", MIN, 0, &[1.0]).unwrap();
        assert!(moving_average(&s, Duration::from_secs(30)).is_err());
        assert!(moving_average(&s, Duration::from_secs(90)).is_err());
        assert!(moving_average(&s, Duration::ZERO).is_err());
    }

    #[test]
    fn series_invariants_enforced() {
        assert!(MetricSeries::new("", MIN, 0, vec![]).is_err());
        assert!(MetricSeries::new("m", MIN, 0, vec![Sample::new(30, 1.0)]).is_err());
        assert!(
            MetricSeries::new("m", MIN, 0, vec![Sample::new(60, 1.0), Sample::new(60, 1.0)])
                .is_err()
        );
    }

    #[test]
    fn window_bounds_are_half_open() {
        let s = MetricSeries::from_values("m", MIN, 0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        let w: Vec<i64> = s.window(60, 180).iter().map(|p| p.ts).collect();
        assert_eq!(w, vec![120, 180]);
        assert!(s.window(500, 600).is_empty());
    }
}
