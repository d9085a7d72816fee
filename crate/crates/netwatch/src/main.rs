use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netwatch::commands::{
    cmd_baseline, cmd_bench, cmd_detect, cmd_geo_detect, cmd_geo_report, cmd_synth, log_report,
};
use netwatch::config::RunConfig;
use netwatch::ingest::parse_timestamp;
use netwatch::{Error, Result};
use netwatch_core::time::{Timestamp, SECS_PER_DAY};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "netwatch", version, about = "Weekly-baseline anomaly detection over metric and access logs")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data root; overrides the configured root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Evaluation time, epoch seconds or RFC3339. Defaults to the wall clock.
    #[arg(long, global = true, value_parser = parse_ts)]
    now: Option<Timestamp>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic workload under the data root.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        /// Weeks of metric data.
        #[arg(long)]
        weeks: Option<u32>,
    },
    /// Build weekly baselines as of `--now`.
    Baseline {
        /// Weeks of history per baseline.
        #[arg(long)]
        weeks: Option<u32>,
        /// Smoothing window in minutes.
        #[arg(long)]
        window: Option<i64>,
    },
    /// Evaluate every rule once at `--now`.
    Detect {
        #[arg(long)]
        grace: Option<i64>,
        #[arg(long)]
        renotify: Option<i64>,
    },
    /// Export per-country map data and top IPs for `[from, to)`.
    GeoReport {
        #[arg(long, value_parser = parse_ts)]
        from: Option<Timestamp>,
        #[arg(long, value_parser = parse_ts)]
        to: Option<Timestamp>,
        #[arg(long)]
        topk: Option<usize>,
    },
    /// Detect sustained visits from uncommon countries at `--now`.
    GeoDetect {
        #[arg(long)]
        sustain: Option<i64>,
        #[arg(long)]
        quantile: Option<f64>,
    },
    /// Measure throughput of each pipeline stage.
    Bench {
        #[arg(long)]
        weeks: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_ts(s: &str) -> std::result::Result<Timestamp, String> {
    parse_timestamp(s)
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::with_root("."),
    };
    if let Some(out) = &cli.out {
        cfg.root = out.clone();
    }
    match &cli.command {
        Command::Synth { seed, weeks } => {
            if let Some(s) = seed {
                cfg.synth.seed = *s;
                if let Some(a) = cfg.access.as_mut() {
                    a.seed = *s;
                }
            }
            if let Some(w) = weeks {
                cfg.synth.weeks = *w;
            }
        }
        Command::Baseline { weeks, window } => {
            if let Some(w) = weeks {
                cfg.baseline.weeks_back = *w;
            }
            if let Some(w) = window {
                cfg.baseline.window_min = *w;
            }
        }
        Command::Detect { grace, renotify } => {
            if let Some(g) = grace {
                cfg.detect.grace_min = *g;
            }
            if let Some(r) = renotify {
                cfg.detect.renotify_min = *r;
            }
        }
        Command::GeoReport { topk, .. } => {
            if let Some(k) = topk {
                cfg.geo.top_k = *k;
            }
        }
        Command::GeoDetect { sustain, quantile } => {
            if let Some(s) = sustain {
                cfg.geo.sustain_min = *s;
            }
            if let Some(q) = quantile {
                cfg.geo.quantile = *q;
            }
        }
        Command::Bench { weeks, seed } => {
            if let Some(w) = weeks {
                cfg.baseline.weeks_back = *w;
            }
            if let Some(s) = seed {
                cfg.synth.seed = *s;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn wall_clock() -> Timestamp {
    chrono::Utc::now().timestamp()
}

fn run(cli: &Cli) -> Result<Vec<Value>> {
    let cfg = load_config(cli)?;
    let now = cli.now.unwrap_or_else(wall_clock);
    let lines = match &cli.command {
        Command::Synth { .. } => cmd_synth(&cfg)?.lines(),
        Command::Baseline { .. } => cmd_baseline(&cfg, now)?.lines(),
        Command::Detect { .. } => cmd_detect(&cfg, now)?.lines(),
        Command::GeoReport { from, to, .. } => {
            let to = to.unwrap_or(now);
            let from = from.unwrap_or(to - cfg.geo.report_days * SECS_PER_DAY);
            if from > to {
                return Err(Error::Config(format!("--from {from} is after --to {to}")));
            }
            cmd_geo_report(&cfg, from, to)?.lines()
        }
        Command::GeoDetect { .. } => cmd_geo_detect(&cfg, now)?.lines(),
        Command::Bench { .. } => cmd_bench(&cfg)?.lines(),
    };
    log_report(&cfg.reports_file(), &lines)?;
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for l in &lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("netwatch: {e}");
            ExitCode::FAILURE
        }
    }
}
