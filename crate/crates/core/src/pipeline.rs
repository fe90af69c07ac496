//! End-to-end stages shared by the command-line tool and the test suites:
//! load → clean → partition by quarter → profiles → outlier screen → K
//! selection, and balance indices per window.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::balance::{compute_balance, BalanceError, BalanceIndex, BalanceWindow, CategoryScheme};
use crate::calendar::Quarter;
use crate::cluster::{
    detect_outlier_stations, select_k, ClusterError, FeatureSet, KSelection, OutlierParams,
    OutlierReport,
};
use crate::ingest::{
    clean_trips, filter_low_activity_stations, parse_trips, partition_events, CleaningReport,
    CleaningRules, EventKind, IngestError, ParseOptions, ParsedTrips, QuarterEvents, RowDiagnostic,
    StationId, TripRecord,
};
use crate::profiles::{build_profiles, ExclusionReason, ProfileSet};
use crate::report::{quarter_summary, QuarterSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error("no trips fall in quarter {0}")]
    MissingQuarter(Quarter),
    #[error("{eligible} stations remain eligible for {kind} clustering; at least {needed} are needed for k = {min_k}")]
    TooFewStations {
        kind: EventKind,
        eligible: usize,
        needed: usize,
        min_k: usize,
    },
}

/// Parses every file in order. Generated trip ids are prefixed by the file's
/// position so they stay unique across files.
pub fn load_trip_files(paths: &[PathBuf], opts: &ParseOptions) -> Result<ParsedTrips, IngestError> {
    let mut all = ParsedTrips::default();
    for (i, path) in paths.iter().enumerate() {
        let file = open(path)?;
        let mut file_opts = opts.clone();
        if paths.len() > 1 {
            file_opts.trip_id_prefix = format!("{}f{}-", opts.trip_id_prefix, i + 1);
        }
        let parsed = parse_trips(std::io::BufReader::with_capacity(1 << 20, file), &file_opts)?;
        log::info!(
            "{}: {} rows, {} trips, {} diagnostics",
            path.display(),
            parsed.rows_read,
            parsed.trips.len(),
            parsed.diagnostics.len()
        );
        all.merge(parsed);
    }
    Ok(all)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Cleaned trips split into quarters, with the raw trips kept for summaries.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw_by_quarter: BTreeMap<Quarter, Vec<TripRecord>>,
    pub clean_by_quarter: BTreeMap<Quarter, Vec<TripRecord>>,
    pub quarters: BTreeMap<Quarter, QuarterEvents>,
    pub cleaning: CleaningReport,
    /// Rejected and suspicious rows from parsing.
    pub diagnostics: Vec<RowDiagnostic>,
}

impl Prepared {
    pub fn quarter(&self, q: Quarter) -> Result<&QuarterEvents, PipelineError> {
        self.quarters
            .get(&q)
            .ok_or(PipelineError::MissingQuarter(q))
    }

    pub fn summary(&self, q: Quarter) -> QuarterSummary {
        let none = Vec::new();
        quarter_summary(
            q,
            self.raw_by_quarter.get(&q).unwrap_or(&none),
            self.clean_by_quarter.get(&q).unwrap_or(&none),
        )
    }

    /// Quarters with at least one raw trip.
    pub fn quarter_list(&self) -> Vec<Quarter> {
        self.raw_by_quarter.keys().copied().collect()
    }
}

fn by_quarter(trips: &[TripRecord]) -> BTreeMap<Quarter, Vec<TripRecord>> {
    let mut out: BTreeMap<Quarter, Vec<TripRecord>> = BTreeMap::new();
    for t in trips {
        out.entry(Quarter::of(t.start_time.date()))
            .or_default()
            .push(t.clone());
    }
    out
}

/// Cleans `parsed` and partitions the kept trips by the quarter of their start.
pub fn prepare(parsed: ParsedTrips, rules: &CleaningRules) -> Prepared {
    let raw_by_quarter = by_quarter(&parsed.trips);
    let (kept, mut cleaning) = clean_trips(parsed.trips, rules);
    cleaning.absorb_parse_errors(&parsed.diagnostics);
    log::info!(
        "cleaning: {} in, {} kept, {} removed",
        cleaning.input_count,
        cleaning.kept_count,
        cleaning.removed.len()
    );
    let quarters = partition_events(&kept);
    Prepared {
        raw_by_quarter,
        clean_by_quarter: by_quarter(&kept),
        quarters,
        cleaning,
        diagnostics: parsed.diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub k_range: RangeInclusive<usize>,
    pub seed: u64,
    pub restarts: usize,
    /// Stations averaging fewer events of the clustered kind per day are left out.
    pub min_daily_avg: f64,
    pub outliers: OutlierParams,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            k_range: 2..=10,
            seed: 0,
            restarts: crate::cluster::DEFAULT_RESTARTS,
            min_daily_avg: 5.0,
            outliers: OutlierParams {
                probe_k: 6,
                ..OutlierParams::default()
            },
        }
    }
}

/// Station counts entering and leaving each clustering stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub stations_with_events: usize,
    pub low_activity: usize,
    pub profiled: usize,
    pub missing_day_type: usize,
    pub outliers: usize,
    pub clustered: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub quarter: Quarter,
    pub kind: EventKind,
    pub profiles: ProfileSet,
    pub features: FeatureSet,
    pub outliers: OutlierReport,
    pub selection: KSelection,
    pub counts: StageCounts,
}

/// Profiles one kind of event in `quarter`, screens outliers and selects K.
///
/// The upper end of the K range is lowered to `stations - 1` when fewer
/// stations remain than the range needs.
pub fn run_clustering(
    quarter: &QuarterEvents,
    kind: EventKind,
    settings: &ClusterSettings,
) -> Result<ClusterRun, PipelineError> {
    let span = quarter.quarter.span();
    let stations: BTreeSet<&StationId> = quarter.stations();
    let low = filter_low_activity_stations(
        quarter.events(),
        stations.iter().copied(),
        span.len_days() as i64,
        settings.min_daily_avg,
    )?;
    let skip = low.for_kind(kind);
    let mut profiles = build_profiles(quarter, kind, span, skip);
    let mut counts = StageCounts {
        stations_with_events: stations.len(),
        low_activity: skip.len(),
        profiled: profiles.profiles.len(),
        missing_day_type: profiles
            .excluded
            .values()
            .filter(|r| {
                matches!(
                    r,
                    ExclusionReason::NoWeekdayData | ExclusionReason::NoWeekendData
                )
            })
            .count(),
        ..StageCounts::default()
    };
    log::info!(
        "{} {kind}: {} stations, {} low-activity, {} profiled",
        quarter.quarter,
        counts.stations_with_events,
        counts.low_activity,
        counts.profiled
    );

    let (lo, hi) = (*settings.k_range.start(), *settings.k_range.end());
    let too_few = |eligible: usize| PipelineError::TooFewStations {
        kind,
        eligible,
        needed: lo + 1,
        min_k: lo,
    };
    let all = FeatureSet::new(profiles.features())?;
    if all.len() <= lo {
        return Err(too_few(all.len()));
    }
    let outliers = detect_outlier_stations(&all, &settings.outliers, settings.seed)?;
    profiles.exclude(&outliers.removed_stations, ExclusionReason::Outlier);
    let features = all.without(&outliers.removed_stations);
    counts.outliers = outliers.removed_stations.len();
    counts.clustered = features.len();
    log::info!(
        "{} {kind}: {} outliers removed, {} stations clustered",
        quarter.quarter,
        counts.outliers,
        counts.clustered
    );
    if features.len() <= lo {
        return Err(too_few(features.len()));
    }
    let hi = hi.min(features.len() - 1);
    if hi < *settings.k_range.end() {
        log::warn!("k range capped at {hi} by the number of stations");
    }
    let selection = select_k(&features, lo..=hi, settings.seed, settings.restarts)?;
    log::info!(
        "{} {kind}: chose k = {}",
        quarter.quarter,
        selection.chosen_k
    );
    Ok(ClusterRun {
        quarter: quarter.quarter,
        kind,
        profiles,
        features,
        outliers,
        selection,
        counts,
    })
}

/// Balance indices over the whole calendar quarter, ordered by window then station.
pub fn run_balance(
    quarter: &QuarterEvents,
    windows: &[BalanceWindow],
    scheme: &CategoryScheme,
) -> Result<Vec<BalanceIndex>, PipelineError> {
    Ok(compute_balance(
        quarter,
        quarter.quarter.span(),
        windows,
        scheme,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::adjusted_rand_index;
    use crate::synth::{generate_trips, standard_archetypes};
    use crate::DateSpan;
    use chrono::NaiveDate;

    #[test]
    fn planted_archetypes_recovered() {
        let first = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
        let span = DateSpan::new(first, NaiveDate::from_ymd_opt(2015, 9, 30).unwrap()).unwrap();
        let (trips, truth) = generate_trips(&standard_archetypes(40.0, 0.1), 10, span, 3).unwrap();
        let prepared = prepare(
            ParsedTrips {
                trips,
                ..ParsedTrips::default()
            },
            &CleaningRules::default(),
        );
        assert!(prepared.cleaning.removed.is_empty());
        let q = prepared.quarter(Quarter::new(2015, 3).unwrap()).unwrap();
        let settings = ClusterSettings {
            k_range: 2..=6,
            restarts: 5,
            ..ClusterSettings::default()
        };
        let run = run_clustering(q, EventKind::Pickup, &settings).unwrap();
        assert_eq!(run.selection.chosen_k, 3);
        let labels = run.selection.model.labels_for(&run.features).unwrap();
        let planted: Vec<&str> = truth
            .labels_for(run.features.ids())
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert!(adjusted_rand_index(&labels, &planted) > 0.99);
    }

    #[test]
    fn too_few_stations_reported() {
        let first = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
        let span = DateSpan::new(first, first + chrono::Duration::days(13)).unwrap();
        let (trips, _) = generate_trips(&standard_archetypes(40.0, 0.1), 1, span, 3).unwrap();
        let prepared = prepare(
            ParsedTrips {
                trips,
                ..ParsedTrips::default()
            },
            &CleaningRules::default(),
        );
        let q = prepared.quarter(Quarter::new(2015, 3).unwrap()).unwrap();
        let settings = ClusterSettings {
            k_range: 4..=6,
            min_daily_avg: 0.0,
            ..ClusterSettings::default()
        };
        assert!(matches!(
            run_clustering(q, EventKind::Dropoff, &settings),
            Err(PipelineError::TooFewStations { eligible: 3, .. })
        ));
    }
}
