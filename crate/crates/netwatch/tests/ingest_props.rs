use std::collections::BTreeMap;

use netwatch::ingest::{parse_metric_line, InputFormat, MetricParser, MetricRecord, RecentStore};
use netwatch_core::Duration;
use proptest::prelude::*;

fn record() -> impl Strategy<Value = MetricRecord> {
    (
        0i64..4_000_000_000,
        "[a-z][a-z0-9_.:-]{0,15}",
        prop_oneof![-1e12f64..1e12, Just(0.0), Just(0.1 + 0.2)],
        prop::collection::btree_map("[a-z]{1,6}", "[A-Za-z0-9/._-]{1,8}", 0..3),
    )
        .prop_map(|(timestamp, metric_id, value, tags)| MetricRecord { timestamp, metric_id, value, tags })
}

fn held(store: &RecentStore) -> BTreeMap<String, Vec<(i64, f64)>> {
    store
        .metric_ids()
        .into_iter()
        .map(|m| {
            let s = store.series(m).unwrap();
            (m.to_string(), s.points().iter().map(|p| (p.ts, p.value)).collect())
        })
        .collect()
}

proptest! {
    #[test]
    fn csv_and_json_lines_are_lossless(r in record()) {
        for (line, fmt) in [(r.to_csv_line(), InputFormat::Csv), (r.to_json_line(), InputFormat::Jsonl)] {
            let back = parse_metric_line(&line, fmt).unwrap().unwrap();
            prop_assert_eq!(back.value.to_bits(), r.value.to_bits());
            prop_assert_eq!(&back, &r);
        }
    }

    #[test]
    fn parser_keeps_every_valid_line(
        recs in prop::collection::vec(record(), 0..60),
        junk in prop::collection::vec(0usize..60, 0..10),
    ) {
        let mut lines: Vec<String> = recs.iter().map(MetricRecord::to_csv_line).collect();
        for &at in &junk {
            lines.insert(at.min(lines.len()), "not,a record".into());
        }
        let text = lines.join("\n");
        let mut parser = MetricParser::new(text.as_bytes(), InputFormat::Csv);
        let got: Vec<MetricRecord> = parser.by_ref().collect();
        let report = parser.finish().unwrap();
        prop_assert_eq!(got, recs);
        prop_assert_eq!(report.invalid, junk.len());
    }

    #[test]
    fn store_contents_ignore_arrival_order(
        raw in prop::collection::vec((0i64..3_600, 0usize..3, -1e3f64..1e3), 1..300),
        seed in any::<u64>(),
    ) {
        let recs: Vec<MetricRecord> = raw
            .iter()
            .map(|&(t, m, v)| MetricRecord {
                timestamp: 1_700_000_000 + t,
                metric_id: format!("m{m}"),
                value: v,
                tags: BTreeMap::new(),
            })
            .collect();
        let mut shuffled = recs.clone();
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let build = |rs: &[MetricRecord]| {
            let mut st = RecentStore::new(Duration::from_mins(120), Duration::from_mins(1));
            let sum = st.ingest(rs);
            (held(&st), sum.accepted)
        };
        prop_assert_eq!(build(&recs), build(&shuffled));
    }

    #[test]
    fn store_holds_only_the_horizon(
        raw in prop::collection::vec((0i64..20_000, 0usize..4), 1..400),
        horizon_min in 1i64..90,
    ) {
        let mut st = RecentStore::new(Duration::from_mins(horizon_min), Duration::from_mins(1));
        let mut accepted = 0u64;
        for &(t, m) in &raw {
            let r = MetricRecord { timestamp: t, metric_id: format!("m{m}"), value: 1.0, tags: BTreeMap::new() };
            accepted += st.insert(&r) as u64;
        }
        let newest = st.newest().unwrap();
        prop_assert_eq!(newest, raw.iter().map(|r| r.0 / 60 * 60).max().unwrap());
        prop_assert!(st.oldest().unwrap() > newest - horizon_min * 60);
        prop_assert_eq!(accepted + st.dropped(), raw.len() as u64);
        prop_assert_eq!(st.len() as u64 + st.evicted(), accepted);
    }
}
