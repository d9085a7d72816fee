//! Files, ingest, synthetic workloads and commands around `netwatch-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod fsutil;
pub mod ingest;
pub mod synth;

pub use error::{Error, Result};
