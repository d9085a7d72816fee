//! Run configuration: one TOML file, every field optional.
//!
//! Relative paths resolve against `root`, and a relative `root` against
//! the directory holding the config file.
//!
//! ```toml
//! root = "data"
//!
//! [paths]
//! history = "history"          # <metric_id>/<YYYY-MM-DD>.csv partitions
//! baselines = "baselines"
//! rules = "rules.toml"
//!
//! [baseline]
//! weeks_back = 8
//! window_min = 10
//!
//! [detect]
//! grace_min = 10
//! renotify_min = 60
//! lookback_min = 60
//!
//! [geo]
//! sustain_min = 30
//! quantile = 0.99
//! top_k = 100000
//! ```

use std::path::{Path, PathBuf};

use netwatch_core::baseline::{BaselineConfig, DEFAULT_DEVIATION_MULTIPLIER, DEFAULT_WEEKS_BACK};
use netwatch_core::geo::{DEFAULT_MAP_TOP_K, DEFAULT_QUANTILE, DEFAULT_TOOLTIP_TOP};
use netwatch_core::series::Aggregation;
use netwatch_core::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::rules::RuleDefaults;
use crate::fsutil::read_to_string;
use crate::synth::{AccessSpec, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub history: Option<PathBuf>,
    pub baselines: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub state: Option<PathBuf>,
    pub alerts: Option<PathBuf>,
    pub geo_alerts: Option<PathBuf>,
    pub geo_table: Option<PathBuf>,
    /// Access-record file, or a directory whose `.csv`/`.jsonl` files are read.
    pub access: Option<PathBuf>,
    pub whitelist: Option<PathBuf>,
    pub export: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub weeks_back: u32,
    pub window_min: i64,
    pub resolution_secs: i64,
    pub deviation_multiplier: f64,
    /// Metrics to build; empty means every metric in the history store.
    pub metrics: Vec<String>,
    /// Metrics whose same-bucket samples average instead of summing.
    pub gauges: Vec<String>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            weeks_back: DEFAULT_WEEKS_BACK,
            window_min: 10,
            resolution_secs: 60,
            deviation_multiplier: DEFAULT_DEVIATION_MULTIPLIER,
            metrics: Vec::new(),
            gauges: Vec::new(),
        }
    }
}

impl BaselineSection {
    pub fn config(&self) -> BaselineConfig {
        BaselineConfig {
            weeks_back: self.weeks_back,
            window: Duration::from_mins(self.window_min),
            resolution: Duration::from_secs(self.resolution_secs),
            deviation_multiplier: self.deviation_multiplier,
        }
    }

    pub fn aggregation(&self, metric_id: &str) -> Aggregation {
        if self.gauges.iter().any(|g| g == metric_id) {
            Aggregation::Mean
        } else {
            Aggregation::Sum
        }
    }
}

/// Defaults for rules that leave these fields out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub grace_min: i64,
    pub renotify_min: i64,
    pub lookback_min: i64,
}

impl Default for DetectSection {
    fn default() -> Self {
        let d = RuleDefaults::default();
        DetectSection {
            grace_min: d.grace.as_mins(),
            renotify_min: d.renotify_after.as_mins(),
            lookback_min: d.lookback.as_mins(),
        }
    }
}

impl DetectSection {
    pub fn rule_defaults(&self) -> RuleDefaults {
        RuleDefaults {
            grace: Duration::from_mins(self.grace_min),
            lookback: Duration::from_mins(self.lookback_min),
            renotify_after: Duration::from_mins(self.renotify_min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoSection {
    pub sustain_min: i64,
    pub quantile: f64,
    pub top_k: usize,
    pub tooltip_top: usize,
    /// History span the per-country models are built from.
    pub history_days: i64,
    /// Live window examined by geo detection, ending at `now`.
    pub live_min: i64,
    /// Span of the map report, ending at `now`.
    pub report_days: i64,
}

impl Default for GeoSection {
    fn default() -> Self {
        GeoSection {
            sustain_min: 30,
            quantile: DEFAULT_QUANTILE,
            top_k: DEFAULT_MAP_TOP_K,
            tooltip_top: DEFAULT_TOOLTIP_TOP,
            history_days: 7,
            live_min: 60,
            report_days: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub repeats: usize,
    pub parse_records: usize,
    pub baseline_metrics: usize,
    pub rules: usize,
    pub access_records: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            repeats: 3,
            parse_records: 1_000_000,
            baseline_metrics: 4,
            rules: 300,
            access_records: 400_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub root: PathBuf,
    pub paths: PathsConfig,
    pub baseline: BaselineSection,
    pub detect: DetectSection,
    pub geo: GeoSection,
    pub synth: SyntheticSpec,
    /// Access-record generation for `synth`; skipped when absent.
    pub access: Option<AccessSpec>,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn with_root(root: impl Into<PathBuf>) -> Self {
        RunConfig {
            root: root.into(),
            ..Default::default()
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(path, line, e.message().to_string())
        })?;
        if cfg.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.root = base.join(&cfg.root);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    fn resolve(&self, p: &Option<PathBuf>, default: &str) -> PathBuf {
        let p = p.as_deref().unwrap_or(Path::new(default));
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn history_dir(&self) -> PathBuf {
        self.resolve(&self.paths.history, "history")
    }

    pub fn baseline_dir(&self) -> PathBuf {
        self.resolve(&self.paths.baselines, "baselines")
    }

    pub fn rules_file(&self) -> PathBuf {
        self.resolve(&self.paths.rules, "rules.toml")
    }

    pub fn state_file(&self) -> PathBuf {
        self.resolve(&self.paths.state, "state/containment.tsv")
    }

    pub fn alerts_file(&self) -> PathBuf {
        self.resolve(&self.paths.alerts, "alerts/alerts.jsonl")
    }

    pub fn geo_alerts_file(&self) -> PathBuf {
        self.resolve(&self.paths.geo_alerts, "alerts/geo_alerts.jsonl")
    }

    pub fn geo_table(&self) -> PathBuf {
        self.resolve(&self.paths.geo_table, "geo/table.csv")
    }

    pub fn access_path(&self) -> PathBuf {
        self.resolve(&self.paths.access, "access")
    }

    pub fn whitelist(&self) -> PathBuf {
        self.resolve(&self.paths.whitelist, "geo/whitelist.txt")
    }

    pub fn export_dir(&self) -> PathBuf {
        self.resolve(&self.paths.export, "export")
    }

    pub fn reports_file(&self) -> PathBuf {
        self.resolve(&self.paths.reports, "reports/runs.jsonl")
    }

    pub fn labels_file(&self) -> PathBuf {
        self.resolve(&self.paths.labels, "labels.jsonl")
    }

    pub fn validate(&self) -> Result<()> {
        self.baseline.config().validate()?;
        let d = &self.detect;
        if d.grace_min <= 0 || d.renotify_min <= 0 || d.lookback_min <= 0 {
            return Err(Error::Config("detect durations must be positive".into()));
        }
        let g = &self.geo;
        if g.sustain_min <= 0 || g.live_min <= 0 || g.history_days <= 0 || g.report_days <= 0 {
            return Err(Error::Config("geo durations must be positive".into()));
        }
        if !(g.quantile > 0.0 && g.quantile < 1.0) {
            return Err(Error::Config(format!("geo quantile {} outside (0, 1)", g.quantile)));
        }
        Ok(())
    }
}
