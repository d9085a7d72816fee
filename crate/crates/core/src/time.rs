//! Integral epoch-second time arithmetic.
//!
//! Timestamps are plain `i64` seconds since the Unix epoch (UTC). Weeks
//! start on Monday 00:00 UTC. All alignment is done with integer
//! arithmetic so slot membership never drifts.

use core::fmt;
use core::ops::{Add, Mul, Sub};

pub type Timestamp = i64;

pub const SECS_PER_MINUTE: i64 = 60;
pub const SECS_PER_HOUR: i64 = 3_600;
pub const SECS_PER_DAY: i64 = 86_400;
pub const SECS_PER_WEEK: i64 = 7 * SECS_PER_DAY;
pub const MINUTES_PER_WEEK: i64 = SECS_PER_WEEK / SECS_PER_MINUTE;

/// 1970-01-05T00:00:00Z, the first Monday after the epoch.
pub const FIRST_MONDAY: Timestamp = 4 * SECS_PER_DAY;

/// A span of time in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Duration(i64);

impl Duration {
    pub const ZERO: Duration = Duration(0);
    pub const WEEK: Duration = Duration(SECS_PER_WEEK);

    pub const fn from_secs(secs: i64) -> Self {
        Duration(secs)
    }

    pub const fn from_mins(mins: i64) -> Self {
        Duration(mins * SECS_PER_MINUTE)
    }

    pub const fn from_hours(hours: i64) -> Self {
        Duration(hours * SECS_PER_HOUR)
    }

    pub const fn from_days(days: i64) -> Self {
        Duration(days * SECS_PER_DAY)
    }

    pub const fn as_secs(self) -> i64 {
        self.0
    }

    /// Whole minutes, truncated.
    pub const fn as_mins(self) -> i64 {
        self.0 / SECS_PER_MINUTE
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// `true` when `self` is a positive whole multiple of `unit`.
    pub const fn is_multiple_of(self, unit: Duration) -> bool {
        unit.0 > 0 && self.0 > 0 && self.0 % unit.0 == 0
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

impl Mul<i64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: i64) -> Duration {
        Duration(self.0 * rhs)
    }
}

/// Floor `ts` to a multiple of `step` seconds (epoch-anchored).
pub fn align_down(ts: Timestamp, step: Duration) -> Timestamp {
    ts - ts.rem_euclid(step.as_secs())
}

/// Seconds elapsed since the most recent Monday 00:00 UTC.
pub fn second_of_week(ts: Timestamp) -> i64 {
    (ts - FIRST_MONDAY).rem_euclid(SECS_PER_WEEK)
}

/// Minutes elapsed since the most recent Monday 00:00 UTC.
pub fn minute_of_week(ts: Timestamp) -> i64 {
    second_of_week(ts) / SECS_PER_MINUTE
}

/// Day of week, `0` = Monday through `6` = Sunday.
pub fn weekday(ts: Timestamp) -> u8 {
    (second_of_week(ts) / SECS_PER_DAY) as u8
}

/// Start of the week (Monday 00:00 UTC) containing `ts`.
pub fn week_start(ts: Timestamp) -> Timestamp {
    ts - second_of_week(ts)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 2024-01-01T00:00:00Z was a Monday.
    const MON_2024: Timestamp = 1_704_067_200;

    #[test]
    fn week_arithmetic() {
        assert_eq!(second_of_week(MON_2024), 0);
        assert_eq!(weekday(MON_2024), 0);
        assert_eq!(weekday(MON_2024 + 5 * SECS_PER_DAY + 1), 5);
        assert_eq!(weekday(0), 3); // 1970-01-01 was a Thursday
        assert_eq!(minute_of_week(MON_2024 - 60), MINUTES_PER_WEEK - 1);
        assert_eq!(week_start(MON_2024 + 3 * SECS_PER_DAY + 77), MON_2024);
    }

    #[test]
    fn alignment_handles_negative_timestamps() {
        assert_eq!(align_down(-1, Duration::from_mins(1)), -60);
        assert_eq!(align_down(119, Duration::from_mins(1)), 60);
    }

    #[test]
    fn multiples() {
        let minute = Duration::from_mins(1);
        assert!(Duration::from_mins(10).is_multiple_of(minute));
        assert!(!Duration::from_secs(90).is_multiple_of(minute));
        assert!(!Duration::ZERO.is_multiple_of(minute));
    }
}
