use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const MON: i64 = 1_704_067_200;

fn netwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netwatch")).args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn summary(out: &Output) -> Value {
    records(out).into_iter().find(|v| v["record"] == "summary").expect("summary line")
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "runs.jsonl") {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "root = \"data\"\n[synth]\nweeks = 2\nmetrics = 2\n[access]\nrecords = 2000\ndistinct_ips = 500\ntable_ranges = 64\n";

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = netwatch(&["--config", &config(d.path(), SMALL), "synth", "--seed", "5"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (tree(&a.path().join("data")), tree(&b.path().join("data")));
    assert!(ta.len() > 10);
    assert_eq!(ta, tb);

    let c = tempfile::tempdir().unwrap();
    netwatch(&["--config", &config(c.path(), SMALL), "synth", "--seed", "6"]);
    assert_ne!(tree(&c.path().join("data")), ta);
}

#[test]
fn zero_metrics_gives_an_empty_baseline_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "root = \"data\"\n[synth]\nmetrics = 0\n");
    assert!(netwatch(&["--config", &cfg, "synth"]).status.success());
    let out = netwatch(&["--config", &cfg, "--now", "1706486400", "baseline"]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["metrics_processed"], 0);
    assert_eq!(s["built"], 0);
    let out = netwatch(&["--config", &cfg, "--now", "1706486400", "detect"]);
    assert!(out.status.success());
    assert_eq!(summary(&out)["alerts"], 0);
}

#[test]
fn quiet_traffic_raises_no_geo_alerts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), SMALL);
    assert!(netwatch(&["--config", &cfg, "synth"]).status.success());
    let now = (MON + 5 * 86_400).to_string();
    let out = netwatch(&["--config", &cfg, "--now", &now, "geo-detect", "--sustain", "30"]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["alerts"], 0);
    assert!(s["modeled_countries"].as_u64().unwrap() > 0);
}

#[test]
fn empty_interval_exports_an_empty_map() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), SMALL);
    assert!(netwatch(&["--config", &cfg, "synth"]).status.success());
    let (from, to) = ((MON - 86_400).to_string(), MON.to_string());
    let out = netwatch(&["--config", &cfg, "geo-report", "--from", &from, "--to", &to]);
    assert!(out.status.success());
    assert_eq!(summary(&out)["records_in_range"], 0);
    let map = std::fs::read_to_string(d.path().join("data/export/map.jsonl")).unwrap();
    assert_eq!(map.lines().count(), 1);
    let top = std::fs::read_to_string(d.path().join("data/export/top_ips.csv")).unwrap();
    assert_eq!(top.lines().count(), 1);
}

#[test]
fn reports_are_logged_and_fatal_errors_exit_nonzero() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), SMALL);
    assert!(netwatch(&["--config", &cfg, "synth"]).status.success());
    let log = std::fs::read_to_string(d.path().join("data/reports/runs.jsonl")).unwrap();
    assert!(log.contains("\"command\":\"synth\""));

    assert!(!netwatch(&["--config", "/nonexistent/run.toml", "synth"]).status.success());
    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "[detect]\ngrace_minutes = 3\n").unwrap();
    let bad = bad.to_str().unwrap();
    assert!(!netwatch(&["--config", bad, "detect"]).status.success());
    assert!(!netwatch(&["--now", "yesterday", "detect"]).status.success());

    std::fs::write(d.path().join("data/rules.toml"), "[[rule]]\nid = \"x\"\n").unwrap();
    let out = netwatch(&["--config", &cfg, "--now", "1704240000", "detect"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rules.toml"));
}
