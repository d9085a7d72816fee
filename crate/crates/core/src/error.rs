use alloc::string::String;

use crate::time::Timestamp;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no data")]
    NoData,

    #[error("non-finite value at timestamp {0}")]
    NonFinite(Timestamp),

    #[error("resolution must be positive")]
    InvalidResolution,

    #[error("window of {window}s is not a positive multiple of resolution {resolution}s")]
    InvalidWindow { window: i64, resolution: i64 },

    #[error("window of {0}s does not divide the week evenly")]
    WindowDoesNotDivideWeek(i64),

    #[error("invalid series: {0}")]
    InvalidSeries(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient history")]
    InsufficientHistory,

    #[error("no baseline for slot {0}")]
    NoBaselineForSlot(usize),

    #[error("baseline for `{metric}` was built with {field}={found}, expected {expected}")]
    IncompatibleBaseline {
        metric: String,
        field: &'static str,
        found: i64,
        expected: i64,
    },

    #[error("metric `{0}` is absent from the evaluation context")]
    MissingMetric(String),

    #[error("no baseline loaded for metric `{0}`")]
    MissingBaseline(String),

    #[error("series grids do not match: {0}")]
    GridMismatch(&'static str),

    #[error("invalid rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },

    #[error("geo-ip range {index} ({start}..={end}) is invalid: {reason}")]
    InvalidRange {
        index: usize,
        start: u32,
        end: u32,
        reason: &'static str,
    },

    #[error("geo-ip ranges {first} and {second} overlap or are out of order")]
    OverlappingRanges { first: usize, second: usize },

    #[error("invalid country code `{0}`")]
    InvalidCountryCode(String),

    #[error("invalid CIDR `{0}`")]
    InvalidCidr(String),

    #[error("quantile must lie strictly between 0 and 1, got {0}")]
    InvalidQuantile(f64),
}
