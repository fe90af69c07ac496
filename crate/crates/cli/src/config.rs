use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bikeshare_core::balance::{standard_windows, BalanceWindow, CategoryScheme};
use bikeshare_core::cluster::{OutlierParams, DEFAULT_RESTARTS};
use bikeshare_core::ingest::{CleaningRules, ParseOptions};
use bikeshare_core::pipeline::ClusterSettings;
use bikeshare_core::Quarter;
use serde::{Deserialize, Serialize};

/// Everything a run depends on besides the input files themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trips: Vec<PathBuf>,
    pub stations: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Quarters to analyse, e.g. "2015-Q3"; empty means every quarter present.
    pub quarters: Vec<String>,
    pub seed: u64,
    pub parse: ParseOptions,
    pub cleaning: CleaningConfig,
    pub clustering: ClusteringConfig,
    pub windows: Vec<BalanceWindow>,
    pub categories: CategoryScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub min_duration_s: u64,
    pub same_station_min_s: u64,
    pub min_daily_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k_range: [usize; 2],
    pub restarts: usize,
    /// Defaults to the midpoint of `k_range`.
    pub probe_k: Option<usize>,
    pub outliers: OutlierConfig,
}

/// Outlier-screen thresholds; the probe cluster count is `clustering.probe_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierConfig {
    pub min_cluster_size: usize,
    pub min_cluster_fraction: f64,
    pub distance_percentile: f64,
    pub restarts: usize,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        let p = OutlierParams::default();
        Self {
            min_cluster_size: p.min_cluster_size,
            min_cluster_fraction: p.min_cluster_fraction,
            distance_percentile: p.distance_percentile,
            restarts: p.restarts,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trips: Vec::new(),
            stations: None,
            output_dir: PathBuf::from("out"),
            quarters: Vec::new(),
            seed: 42,
            parse: ParseOptions::default(),
            cleaning: CleaningConfig::default(),
            clustering: ClusteringConfig::default(),
            windows: standard_windows(),
            categories: CategoryScheme::default(),
        }
    }
}

impl Default for CleaningConfig {
    fn default() -> Self {
        let rules = CleaningRules::default();
        Self {
            min_duration_s: rules.min_duration_s,
            same_station_min_s: rules.same_station_min_s,
            min_daily_avg: 5.0,
        }
    }
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k_range: [2, 10],
            restarts: DEFAULT_RESTARTS,
            probe_k: None,
            outliers: OutlierConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        // Written so NaN fails too.
        let positive = |x: f64| x > 0.0;
        let c = &self.cleaning;
        if c.min_duration_s == 0 || c.same_station_min_s == 0 {
            bail!("cleaning thresholds must be positive");
        }
        if !positive(c.min_daily_avg) {
            bail!("min_daily_avg must be positive, got {}", c.min_daily_avg);
        }
        let [lo, hi] = self.clustering.k_range;
        if lo < 2 || hi < lo {
            bail!("k_range [{lo}, {hi}] is invalid: need 2 <= min <= max");
        }
        if self.clustering.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if let Some(0) = self.clustering.probe_k {
            bail!("probe_k must be at least 1");
        }
        let o = &self.clustering.outliers;
        if !(0.0..=1.0).contains(&o.min_cluster_fraction)
            || !(o.distance_percentile > 0.0 && o.distance_percentile <= 100.0)
            || o.restarts == 0
        {
            bail!("outlier screen needs min_cluster_fraction in [0, 1], distance_percentile in (0, 100] and restarts >= 1");
        }
        let s = &self.categories;
        if !positive(s.bin_width) || !positive(s.self_balanced_threshold) || s.categories == 0 {
            bail!(
                "category bin width, self-balanced threshold and category count must be positive"
            );
        }
        if self.windows.is_empty() {
            bail!("at least one balance window is required");
        }
        for w in &self.windows {
            BalanceWindow::new(w.label.clone(), w.start, w.end)?;
            if w.label.is_empty() || w.label.contains(['/', '\\']) {
                bail!("window label `{}` cannot be used in file names", w.label);
            }
        }
        let mut labels: Vec<&str> = self.windows.iter().map(|w| w.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|p| p[0] == p[1]) {
            bail!("window labels must be unique");
        }
        self.quarter_list()?;
        Ok(())
    }

    pub fn quarter_list(&self) -> anyhow::Result<Vec<Quarter>> {
        self.quarters
            .iter()
            .map(|q| {
                q.parse::<Quarter>()
                    .map_err(|e| anyhow::anyhow!("quarter `{q}`: {e}"))
            })
            .collect()
    }

    pub fn cleaning_rules(&self) -> CleaningRules {
        CleaningRules {
            min_duration_s: self.cleaning.min_duration_s,
            same_station_min_s: self.cleaning.same_station_min_s,
        }
    }

    pub fn probe_k(&self) -> usize {
        let [lo, hi] = self.clustering.k_range;
        self.clustering.probe_k.unwrap_or((lo + hi) / 2)
    }

    pub fn cluster_settings(&self) -> ClusterSettings {
        let [lo, hi] = self.clustering.k_range;
        let o = &self.clustering.outliers;
        ClusterSettings {
            k_range: lo..=hi,
            seed: self.seed,
            restarts: self.clustering.restarts,
            min_daily_avg: self.cleaning.min_daily_avg,
            outliers: OutlierParams {
                probe_k: self.probe_k(),
                min_cluster_size: o.min_cluster_size,
                min_cluster_fraction: o.min_cluster_fraction,
                distance_percentile: o.distance_percentile,
                restarts: o.restarts,
            },
        }
    }

    /// The resolved configuration as TOML, each setting annotated with where
    /// its default comes from.
    pub fn explain(&self) -> String {
        let mut out = String::from("# Resolved configuration\n");
        for line in self.to_toml().lines() {
            out.push_str(line);
            if let Some(note) = provenance(line) {
                out.push_str("  # ");
                out.push_str(note);
            }
            out.push('\n');
            if line == "[clustering]" && self.clustering.probe_k.is_none() {
                out.push_str(&format!(
                    "# probe_k = {}  # unset: midpoint of k_range\n",
                    self.probe_k()
                ));
            }
        }
        out
    }
}

fn provenance(line: &str) -> Option<&'static str> {
    let key = line.split('=').next()?.trim();
    Some(match key {
        "min_duration_s" => "default 60: trips under one minute are false starts",
        "same_station_min_s" => "default 120: same-station returns under two minutes are re-docks",
        "min_daily_avg" => {
            "default 5: stations averaging under 5 pickups (drop-offs) a day are not clustered"
        }
        "k_range" => {
            "candidate cluster counts; chosen by mean rank of Davies-Bouldin, silhouette and Dunn"
        }
        "restarts" => "default 25 k-means++ restarts",
        "probe_k" => "unset: midpoint of k_range",
        "bin_width" => "default 5: category c covers ((c-1)*5, c*5]",
        "self_balanced_threshold" => "default 5: self-balanced when ADMS <= 5 and ADME <= 5",
        "categories" => "default 8 severity categories, the last open-ended",
        "seed" => "RNG seed for k-means++ and synthetic data",
        "min_cluster_size" => "outlier screen: small cluster has fewer than max(2, 1% of stations)",
        "min_cluster_fraction" => "outlier screen: 1% of stations",
        "distance_percentile" => "outlier screen: 95th percentile of nearest-centroid distances",
        "timestamp_format" => "default %Y-%m-%d %H:%M:%S",
        "duration_tolerance_s" => "warn when Duration and end - start differ by more",
        _ => return None,
    })
}
