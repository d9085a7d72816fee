//! Allocation-only analytics core for single-node network monitoring.
//!
//! Everything in this crate is a pure in-memory computation over owned
//! data, so it builds with `#![no_std]` plus `alloc`:
//!
//! - [`series`]: regularly sampled metric series, regularization and
//!   trailing moving-window smoothing.
//! - [`baseline`]: weekly-seasonal median/deviation baselines built from
//!   the previous N weeks of smoothed data.
//! - [`detect`]: predicate rules with a time of grace, violation intervals
//!   and alarm containment (re-notification suppression).
//! - [`geo`]: IPv4 range table lookup, per-country per-minute visit
//!   aggregation, top-K ranking, empirical CCDF models and sustained
//!   uncommon-origin detection.
//!
//! IO, file formats and the command line live in the `netwatch` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod detect;
pub mod error;
pub mod geo;
pub mod series;
pub mod stats;
pub mod time;

pub use error::{Error, Result};
pub use time::{Duration, Timestamp};
