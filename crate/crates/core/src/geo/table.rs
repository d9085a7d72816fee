use core::net::Ipv4Addr;

use alloc::string::String;
use alloc::vec::Vec;

use super::CountryCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoEntry {
    pub start: u32,
    pub end: u32,
    pub country: CountryCode,
    pub country_name: String,
}

/// Sorted, non-overlapping IPv4 ranges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeoIpTable {
    entries: Vec<GeoEntry>,
}

impl GeoIpTable {
    /// Validates that every range is well formed and that ranges are
    /// strictly ascending without overlap. Errors carry entry indices.
    pub fn new(entries: Vec<GeoEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.start > e.end {
                return Err(Error::InvalidRange {
                    index: i,
                    start: e.start,
                    end: e.end,
                    reason: "range start exceeds range end",
                });
            }
            if i > 0 && e.start <= entries[i - 1].end {
                return Err(Error::OverlappingRanges {
                    first: i - 1,
                    second: i,
                });
            }
        }
        Ok(GeoIpTable { entries })
    }

    pub fn entries(&self) -> &[GeoEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_for(&self, ip: u32) -> Option<&GeoEntry> {
        let idx = self.entries.partition_point(|e| e.start <= ip);
        let candidate = self.entries.get(idx.checked_sub(1)?)?;
        (ip <= candidate.end).then_some(candidate)
    }

    /// Country of `ip`, or [`CountryCode::UNKNOWN`].
    pub fn lookup(&self, ip: Ipv4Addr) -> CountryCode {
        self.lookup_u32(u32::from(ip))
    }

    pub fn lookup_u32(&self, ip: u32) -> CountryCode {
        self.entry_for(ip).map_or(CountryCode::UNKNOWN, |e| e.country)
    }
}
