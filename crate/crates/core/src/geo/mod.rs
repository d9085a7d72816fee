//! Geo-IP visit analytics.
//!
//! Web visits are geolocated with a sorted IPv4 range table, aggregated
//! into per-country per-minute request counts and ranked per IP. Each
//! country's historical per-minute counts define an empirical CCDF; a
//! country whose live rate stays above its historical quantile (or that
//! was never seen before) for a sustained period raises a [`GeoAlert`].

mod anomaly;
mod ccdf;
mod table;
mod topk;
mod visits;
mod whitelist;

use core::fmt;
use core::str::FromStr;

use alloc::string::String;

pub use anomaly::{detect_anomalous_visits, GeoAlert, GeoDetection, DEFAULT_SUSTAIN};
pub use ccdf::{build_country_model, Ccdf, CountryActivityModel, DEFAULT_QUANTILE};
pub use table::{GeoEntry, GeoIpTable};
pub use topk::{top_k_ips, DEFAULT_MAP_TOP_K, DEFAULT_TOOLTIP_TOP};
pub use visits::{
    aggregate_visits, map_records, AccessRecord, CountryMinuteSeries, IpMinute, MapRecord,
    TimeRange, VisitAggregates,
};
pub use whitelist::{Cidr, Whitelist};

use crate::error::Error;

/// ISO 3166-1 alpha-2 country code, stored upper-case.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    /// Sentinel for addresses outside every known range.
    pub const UNKNOWN: CountryCode = CountryCode(*b"ZZ");

    pub fn new(code: &str) -> Result<Self, Error> {
        let b = code.as_bytes();
        if b.len() != 2 || !b.iter().all(u8::is_ascii_alphabetic) {
            return Err(Error::InvalidCountryCode(code.into()));
        }
        Ok(CountryCode([b[0].to_ascii_uppercase(), b[1].to_ascii_uppercase()]))
    }

    pub fn as_str(&self) -> &str {
        core::str::from_utf8(&self.0).expect("ascii letters")
    }

    pub fn is_unknown(&self) -> bool {
        *self == Self::UNKNOWN
    }
}

impl FromStr for CountryCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        CountryCode::new(s)
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountryCode({})", self.as_str())
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn country_codes() {
        assert_eq!(CountryCode::new("es").unwrap().as_str(), "ES");
        assert!(CountryCode::new("ESP").is_err());
        assert!(CountryCode::new("1A").is_err());
        assert!(CountryCode::UNKNOWN.is_unknown());
    }
}
