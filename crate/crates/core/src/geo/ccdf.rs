use alloc::vec::Vec;

use super::{CountryCode, CountryMinuteSeries};
use crate::error::{Error, Result};
use crate::time::Duration;

pub const DEFAULT_QUANTILE: f64 = 0.99;

/// Empirical complementary CDF of integer counts:
/// `P(X > x)` at every distinct observed `x`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ccdf {
    points: Vec<(u64, f64)>,
    n: usize,
}

impl Ccdf {
    pub fn from_counts(counts: &[u64]) -> Self {
        let n = counts.len();
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let mut points = Vec::new();
        let mut i = 0;
        while i < n {
            let x = sorted[i];
            while i < n && sorted[i] == x {
                i += 1;
            }
            points.push((x, (n - i) as f64 / n as f64));
        }
        Ccdf { points, n }
    }

    /// `(x, P(X > x))` in ascending `x`.
    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// `P(X > x)` for any `x`.
    pub fn at(&self, x: u64) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let idx = self.points.partition_point(|&(v, _)| v <= x);
        match idx {
            0 => 1.0,
            i => self.points[i - 1].1,
        }
    }
}

/// Historical per-minute behaviour of one country.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryActivityModel {
    pub country: CountryCode,
    pub history_span: Duration,
    pub ccdf: Ccdf,
    /// Smallest observed count `x` with `P(X > x) <= 1 - q`, at least 1.
    pub quantile_threshold: f64,
    pub ever_seen: bool,
}

/// Model the per-minute counts of `history` (zero minutes included).
pub fn build_country_model(history: &CountryMinuteSeries, q: f64) -> Result<CountryActivityModel> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQuantile(q));
    }
    let ccdf = Ccdf::from_counts(&history.counts);
    let tail = 1.0 - q;
    let x = ccdf
        .points()
        .iter()
        .find(|&&(_, p)| p <= tail)
        .map_or(0, |&(x, _)| x);
    Ok(CountryActivityModel {
        country: history.country,
        history_span: Duration::from_mins(history.counts.len() as i64),
        quantile_threshold: x.max(1) as f64,
        ever_seen: history.counts.iter().any(|&c| c > 0),
        ccdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(counts: Vec<u64>) -> CountryMinuteSeries {
        CountryMinuteSeries {
            country: CountryCode::new("ES").unwrap(),
            start: 0,
            counts,
        }
    }

    #[test]
    fn ccdf_by_hand() {
        let c = Ccdf::from_counts(&[0, 0, 1, 3]);
        assert_eq!(c.points(), &[(0, 0.5), (1, 0.25), (3, 0.0)]);
        assert_eq!(c.at(2), 0.25);
        assert_eq!(c.at(100), 0.0);
        assert_eq!(Ccdf::from_counts(&[2, 5]).at(1), 1.0);
        assert_eq!(Ccdf::from_counts(&[]).at(0), 0.0);
    }

    #[test]
    fn all_zero_history() {
        let m = build_country_model(&series(vec![0; 50]), 0.99).unwrap();
        assert!(!m.ever_seen);
        assert_eq!(m.quantile_threshold, 1.0);
        assert_eq!(m.history_span, Duration::from_mins(50));
    }

    #[test]
    fn quantile_threshold_selection() {
        // 100 minutes: 90 at 2, 9 at 5, 1 at 40.
        let mut counts = vec![2; 90];
        counts.extend(vec![5; 9]);
        counts.push(40);
        let m = build_country_model(&series(counts.clone()), 0.99).unwrap();
        // P(X > 5) = 0.01 <= 0.01 + rounding slack.
        assert_eq!(m.quantile_threshold, 5.0);
        let m = build_country_model(&series(counts), 0.5).unwrap();
        assert_eq!(m.quantile_threshold, 2.0);
        assert!(build_country_model(&series(vec![1]), 1.0).is_err());
    }
}
