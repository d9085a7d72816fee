use core::net::Ipv4Addr;

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// IPv4 network in CIDR notation; a bare address is a `/32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cidr {
    network: u32,
    prefix: u8,
}

impl Cidr {
    pub fn new(addr: Ipv4Addr, prefix: u8) -> Result<Self> {
        if prefix > 32 {
            return Err(Error::InvalidCidr(alloc::format!("{addr}/{prefix}")));
        }
        Ok(Cidr {
            network: u32::from(addr) & Self::mask(prefix),
            prefix,
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCidr(s.to_string());
        let (addr, prefix) = match s.split_once('/') {
            Some((a, p)) => (a, p.parse::<u8>().map_err(|_| bad())?),
            None => (s, 32),
        };
        let addr: Ipv4Addr = addr.parse().map_err(|_| bad())?;
        Cidr::new(addr, prefix).map_err(|_| bad())
    }

    fn mask(prefix: u8) -> u32 {
        if prefix == 0 {
            0
        } else {
            u32::MAX << (32 - prefix as u32)
        }
    }

    pub fn contains(&self, ip: u32) -> bool {
        ip & Self::mask(self.prefix) == self.network
    }

    pub fn network(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.network)
    }

    pub fn prefix(&self) -> u8 {
        self.prefix
    }
}

/// Addresses whose traffic is excluded before modeling and detection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Whitelist {
    entries: Vec<Cidr>,
}

impl Whitelist {
    pub fn new(entries: Vec<Cidr>) -> Self {
        Whitelist { entries }
    }

    pub fn push(&mut self, cidr: Cidr) {
        self.entries.push(cidr);
    }

    pub fn entries(&self) -> &[Cidr] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, ip: u32) -> bool {
        self.entries.iter().any(|c| c.contains(ip))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cidr_matching() {
        let c = Cidr::parse("192.168.1.77/24").unwrap();
        assert_eq!(c.network(), Ipv4Addr::new(192, 168, 1, 0));
        assert!(c.contains(u32::from(Ipv4Addr::new(192, 168, 1, 200))));
        assert!(!c.contains(u32::from(Ipv4Addr::new(192, 168, 2, 1))));
        let host = Cidr::parse("10.0.0.1").unwrap();
        assert_eq!(host.prefix(), 32);
        assert!(host.contains(u32::from(Ipv4Addr::new(10, 0, 0, 1))));
        assert!(!host.contains(u32::from(Ipv4Addr::new(10, 0, 0, 2))));
        assert!(Cidr::parse("0.0.0.0/0").unwrap().contains(u32::MAX));
    }

    #[test]
    fn cidr_errors() {
        for bad in ["10.0.0/8", "10.0.0.1/33", "x", "10.0.0.1/"] {
            assert!(Cidr::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn whitelist_contains() {
        let w = Whitelist::new(vec![Cidr::parse("1.2.3.4").unwrap()]);
        assert!(w.contains(u32::from(Ipv4Addr::new(1, 2, 3, 4))));
        assert!(!Whitelist::default().contains(0));
    }
}
