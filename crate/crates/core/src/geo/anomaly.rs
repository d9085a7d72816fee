use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{CountryActivityModel, CountryCode, VisitAggregates, DEFAULT_TOOLTIP_TOP};
use crate::time::{Duration, Timestamp, SECS_PER_MINUTE};

pub const DEFAULT_SUSTAIN: Duration = Duration::from_mins(30);

#[derive(Debug, Clone, PartialEq)]
pub struct GeoAlert {
    pub country: CountryCode,
    /// First anomalous minute.
    pub start: Timestamp,
    /// Last anomalous minute.
    pub end: Timestamp,
    pub peak_rate: u64,
    /// Per-minute count the rate had to exceed.
    pub model_threshold: f64,
    pub contributing_ips: Vec<(u32, u64)>,
}

impl GeoAlert {
    pub fn duration(&self) -> Duration {
        Duration::from_secs(self.end - self.start + SECS_PER_MINUTE)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoDetection {
    pub alerts: Vec<GeoAlert>,
    /// Live countries without a model that did not alert.
    pub unmodeled: Vec<CountryCode>,
}

/// Sustained uncommon-origin detection.
///
/// A minute is anomalous for a modeled, previously seen country when its
/// count exceeds the model's quantile threshold. Countries never seen in
/// the history (or without any model) are anomalous at any count >= 1.
/// Each maximal run of anomalous minutes lasting at least `sustain`
/// raises one alert listing the top contributing IPs of that run.
pub fn detect_anomalous_visits(
    live: &VisitAggregates,
    models: &BTreeMap<CountryCode, CountryActivityModel>,
    sustain: Duration,
) -> GeoDetection {
    let need = (sustain.as_secs() + SECS_PER_MINUTE - 1) / SECS_PER_MINUTE;
    let need = need.max(1) as usize;
    let mut out = GeoDetection::default();

    for (cc, series) in &live.per_country {
        let model = models.get(cc);
        let threshold = match model {
            Some(m) if m.ever_seen => m.quantile_threshold,
            _ => 0.0,
        };
        let mut raised = false;
        let mut run_start: Option<usize> = None;
        for i in 0..=series.counts.len() {
            let hot = series.counts.get(i).is_some_and(|&c| c as f64 > threshold);
            match (hot, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(first)) => {
                    run_start = None;
                    let last = i - 1;
                    if last + 1 - first < need {
                        continue;
                    }
                    raised = true;
                    out.alerts.push(GeoAlert {
                        country: *cc,
                        start: series.minute_ts(first),
                        end: series.minute_ts(last),
                        peak_rate: series.counts[first..=last].iter().copied().max().unwrap_or(0),
                        model_threshold: threshold,
                        contributing_ips: live.contributors(*cc, first, last, DEFAULT_TOOLTIP_TOP),
                    });
                }
                _ => {}
            }
        }
        if model.is_none() && !raised {
            out.unmodeled.push(*cc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{
        aggregate_visits, build_country_model, AccessRecord, CountryMinuteSeries, GeoEntry,
        GeoIpTable, TimeRange, Whitelist,
    };
    use alloc::vec;
    use core::net::Ipv4Addr;

    fn table() -> GeoIpTable {
        let e = |s, e, cc: &str| GeoEntry {
            start: s,
            end: e,
            country: CountryCode::new(cc).unwrap(),
            country_name: cc.into(),
        };
        GeoIpTable::new(vec![e(0, 999, "ES"), e(1000, 1999, "BY")]).unwrap()
    }

    fn burst(ip: u32, from_min: i64, minutes: i64, per_min: u32) -> Vec<AccessRecord> {
        (0..minutes)
            .map(|m| AccessRecord {
                timestamp: (from_min + m) * 60 + 5,
                client_ip: Ipv4Addr::from(ip),
                service: "web".into(),
                request_count: per_min,
            })
            .collect()
    }

    fn es_model(rate: u64) -> BTreeMap<CountryCode, CountryActivityModel> {
        let es = CountryCode::new("ES").unwrap();
        let hist = CountryMinuteSeries { country: es, start: 0, counts: vec![rate; 500] };
        let mut m = BTreeMap::new();
        m.insert(es, build_country_model(&hist, 0.99).unwrap());
        m
    }

    #[test]
    fn never_seen_country_sustained_burst_alerts_once() {
        let mut recs = burst(1500, 10, 30, 1);
        recs.extend(burst(5, 0, 120, 20));
        let live = aggregate_visits(&recs, &table(), TimeRange::new(0, 120 * 60), &Whitelist::default());
        let det = detect_anomalous_visits(&live, &es_model(20), DEFAULT_SUSTAIN);
        assert_eq!(det.alerts.len(), 1);
        let a = &det.alerts[0];
        assert_eq!(a.country.as_str(), "BY");
        assert_eq!((a.start, a.end), (600, 39 * 60));
        assert_eq!(a.duration(), DEFAULT_SUSTAIN);
        assert_eq!(a.contributing_ips, vec![(1500, 30)]);
        assert!(det.unmodeled.is_empty());
    }

    #[test]
    fn short_burst_is_reported_as_unmodeled() {
        let recs = burst(1500, 10, 29, 1);
        let live = aggregate_visits(&recs, &table(), TimeRange::new(0, 120 * 60), &Whitelist::default());
        let det = detect_anomalous_visits(&live, &es_model(20), DEFAULT_SUSTAIN);
        assert!(det.alerts.is_empty());
        assert_eq!(det.unmodeled, vec![CountryCode::new("BY").unwrap()]);
    }

    #[test]
    fn common_country_within_history_is_quiet() {
        let recs = burst(5, 0, 120, 20);
        let live = aggregate_visits(&recs, &table(), TimeRange::new(0, 120 * 60), &Whitelist::default());
        assert!(detect_anomalous_visits(&live, &es_model(20), DEFAULT_SUSTAIN).alerts.is_empty());
        let det = detect_anomalous_visits(&live, &es_model(5), DEFAULT_SUSTAIN);
        assert_eq!(det.alerts.len(), 1);
        assert_eq!(det.alerts[0].model_threshold, 5.0);
    }

    #[test]
    fn whitelisted_single_source_is_suppressed() {
        let recs = burst(1500, 0, 60, 40);
        let t = table();
        let range = TimeRange::new(0, 60 * 60);
        let live = aggregate_visits(&recs, &t, range, &Whitelist::default());
        let det = detect_anomalous_visits(&live, &BTreeMap::new(), DEFAULT_SUSTAIN);
        assert_eq!(det.alerts[0].contributing_ips, vec![(1500, 2400)]);
        let wl = Whitelist::new(vec![crate::geo::Cidr::parse("0.0.5.220").unwrap()]);
        let live = aggregate_visits(&recs, &t, range, &wl);
        assert!(detect_anomalous_visits(&live, &BTreeMap::new(), DEFAULT_SUSTAIN).alerts.is_empty());
    }
}
