use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use bikeshare_core::balance::{
    self_balanced_fraction, write_balance_csv, BalanceIndex, CategoryMode,
};
use bikeshare_core::cluster::{KEvaluation, OutlierReport};
use bikeshare_core::ingest::{
    write_trips, EventKind, IngestError, RemovalReason, RowDiagnostic, StationCatalog, StationId,
};
use bikeshare_core::pipeline::{self, ClusterRun, PipelineError, Prepared, StageCounts};
use bikeshare_core::profiles::{
    hourly_usage_summary, write_profiles_csv, ExclusionReason, HourlyUsage,
};
use bikeshare_core::report::{
    balance_summary, center_profiles, export_balance_geojson, export_cluster_geojson, round6,
    write_center_profiles_csv, write_cluster_sizes_csv, StyledCollection, SCHEMA_VERSION,
};
use bikeshare_core::synth::{
    generate_trips, standard_archetypes, synthetic_catalog, ArchetypeSpec,
};
use bikeshare_core::{DateSpan, Quarter};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::Failure;

fn classify(e: PipelineError) -> Failure {
    match e {
        PipelineError::Ingest(_) => Failure::config(e),
        other => Failure::pipeline(other),
    }
}

fn output_dir(config: &RunConfig) -> Result<&Path, Failure> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(Failure::config)?;
    Ok(dir)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
) -> Result<(), Failure> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::config)?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|()| w.flush().map_err(Into::into))
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::config)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn write_geojson(path: &Path, collection: &StyledCollection) -> Result<(), Failure> {
    if !collection.skipped.is_empty() {
        log::warn!(
            "{}: {} stations without coordinates left off the map: {}",
            path.display(),
            collection.skipped.len(),
            collection
                .skipped
                .iter()
                .map(StationId::as_str)
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    write_file(path, |w| {
        w.write_all(collection.to_json_pretty().as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn load(config: &RunConfig) -> Result<Prepared, Failure> {
    if config.trips.is_empty() {
        return Err(Failure::config(anyhow!(
            "no trip files given (use --trips or `trips` in the config file)"
        )));
    }
    let parsed =
        pipeline::load_trip_files(&config.trips, &config.parse).map_err(|e| classify(e.into()))?;
    let errors = parsed.errors().count();
    if errors > 0 {
        log::warn!("{errors} malformed rows skipped; see cleaning_report.json");
    }
    Ok(pipeline::prepare(parsed, &config.cleaning_rules()))
}

fn load_catalog(config: &RunConfig) -> Result<Option<StationCatalog>, Failure> {
    match &config.stations {
        Some(path) => StationCatalog::load(path)
            .with_context(|| format!("station catalog {}", path.display()))
            .map(Some)
            .map_err(Failure::config),
        None => {
            log::warn!("no station catalog given; GeoJSON maps are not written");
            Ok(None)
        }
    }
}

fn selected_quarters(config: &RunConfig, prepared: &Prepared) -> Result<Vec<Quarter>, Failure> {
    let requested = config.quarter_list().map_err(Failure::config)?;
    if requested.is_empty() {
        return Ok(prepared.quarter_list());
    }
    Ok(requested)
}

#[derive(Serialize)]
struct CleaningDoc<'a> {
    schema_version: u32,
    input_count: usize,
    kept_count: usize,
    removed_too_short: usize,
    removed_same_station_short: usize,
    parse_errors: usize,
    parse_diagnostics: &'a [RowDiagnostic],
}

pub fn summarize(config: &RunConfig) -> Result<(), Failure> {
    let prepared = load(config)?;
    let dir = output_dir(config)?;
    write_json(
        &dir.join("cleaning_report.json"),
        &CleaningDoc {
            schema_version: SCHEMA_VERSION,
            input_count: prepared.cleaning.input_count,
            kept_count: prepared.cleaning.kept_count,
            removed_too_short: prepared.cleaning.count(RemovalReason::TooShort),
            removed_same_station_short: prepared.cleaning.count(RemovalReason::SameStationShort),
            parse_errors: prepared.cleaning.count(RemovalReason::ParseError),
            parse_diagnostics: &prepared.diagnostics,
        },
    )?;

    println!("quarter   raw_trips  clean_trips  stations  mean_minutes");
    for q in selected_quarters(config, &prepared)? {
        let summary = prepared.summary(q);
        write_json(&dir.join(format!("{q}_summary.json")), &summary)?;
        let usage = match prepared.quarters.get(&q) {
            Some(events) => hourly_usage_summary(events.events(), q.span()),
            None => hourly_usage_summary([], q.span()),
        };
        write_json(
            &dir.join(format!("{q}_hourly_usage.json")),
            &UsageDoc::new(q, &usage),
        )?;
        println!(
            "{:<9} {:>9}  {:>11}  {:>8}  {:>12}",
            q.to_string(),
            summary.trip_count_raw,
            summary.trip_count_clean,
            summary.station_count,
            summary
                .mean_duration_minutes
                .map_or_else(|| "n/a".to_owned(), |m| m.to_string())
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct UsageDoc {
    schema_version: u32,
    quarter: Quarter,
    /// Rows Monday..Sunday, columns hour bins 1..24.
    pickups: Vec<Vec<f64>>,
    dropoffs: Vec<Vec<f64>>,
}

impl UsageDoc {
    fn new(quarter: Quarter, usage: &HourlyUsage) -> Self {
        let rows = |m: &[[f64; 24]; 7]| {
            m.iter()
                .map(|r| r.iter().map(|&x| round6(x)).collect())
                .collect()
        };
        Self {
            schema_version: SCHEMA_VERSION,
            quarter,
            pickups: rows(&usage.pickups),
            dropoffs: rows(&usage.dropoffs),
        }
    }
}

#[derive(Serialize)]
struct ModelDoc<'a> {
    schema_version: u32,
    quarter: Quarter,
    kind: EventKind,
    k: usize,
    seed: u64,
    restarts: usize,
    wcss: f64,
    sizes: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    assignment: &'a BTreeMap<StationId, usize>,
    validity: &'a [KEvaluation],
    stage_counts: &'a StageCounts,
    excluded: &'a BTreeMap<StationId, ExclusionReason>,
    outliers: Vec<&'a StationId>,
    /// Reference cluster count for the 2015-Q3 Capital Bikeshare data, for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_k: Option<usize>,
}

fn reference_k(q: Quarter, kind: EventKind) -> Option<usize> {
    (q == Quarter {
        year: 2015,
        quarter: 3,
    })
    .then_some(match kind {
        EventKind::Dropoff => 8,
        EventKind::Pickup => 7,
    })
}

#[derive(Serialize)]
struct OutlierDoc<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a OutlierReport,
}

fn write_cluster_outputs(
    dir: &Path,
    run: &ClusterRun,
    catalog: Option<&StationCatalog>,
) -> Result<(), Failure> {
    let model = &run.selection.model;
    let stem = format!("{}_{}", run.quarter, run.kind);
    let reference = reference_k(run.quarter, run.kind);
    write_json(
        &dir.join(format!("{stem}_model.json")),
        &ModelDoc {
            schema_version: SCHEMA_VERSION,
            quarter: run.quarter,
            kind: run.kind,
            k: model.k,
            seed: model.seed,
            restarts: model.restarts,
            wcss: round6(model.wcss),
            sizes: model.sizes(),
            centroids: model
                .centroids
                .iter()
                .map(|c| c.iter().map(|&x| round6(x)).collect())
                .collect(),
            assignment: &model.assignment,
            validity: &run.selection.table,
            stage_counts: &run.counts,
            excluded: &run.profiles.excluded,
            outliers: run.outliers.removed_stations.iter().collect(),
            reference_k: reference,
        },
    )?;
    let rows = center_profiles(model).map_err(Failure::pipeline)?;
    write_file(&dir.join(format!("{stem}_centers.csv")), |w| {
        Ok(write_center_profiles_csv(w, &rows)?)
    })?;
    write_file(&dir.join(format!("{stem}_cluster_sizes.csv")), |w| {
        Ok(write_cluster_sizes_csv(w, model)?)
    })?;
    write_file(&dir.join(format!("{stem}_profiles.csv")), |w| {
        Ok(write_profiles_csv(w, &run.profiles.profiles)?)
    })?;
    write_json(
        &dir.join(format!("{stem}_outliers.json")),
        &OutlierDoc {
            schema_version: SCHEMA_VERSION,
            report: &run.outliers,
        },
    )?;
    if let Some(catalog) = catalog {
        let map = export_cluster_geojson(catalog, model).map_err(Failure::pipeline)?;
        write_geojson(&dir.join(format!("{stem}_clusters.geojson")), &map)?;
    }
    let sizes = model.sizes();
    println!(
        "{} {:<7} k = {}{}  stations = {}  outliers = {}  sizes = {:?}",
        run.quarter,
        run.kind.as_str(),
        model.k,
        reference.map_or_else(String::new, |p| format!(" (reference: {p})")),
        run.counts.clustered,
        run.counts.outliers,
        sizes
    );
    Ok(())
}

pub fn cluster(config: &RunConfig, kinds: &[EventKind]) -> Result<(), Failure> {
    let prepared = load(config)?;
    let catalog = load_catalog(config)?;
    let dir = output_dir(config)?;
    let settings = config.cluster_settings();
    for q in selected_quarters(config, &prepared)? {
        let events = prepared.quarter(q).map_err(classify)?;
        for &kind in kinds {
            let run = pipeline::run_clustering(events, kind, &settings).map_err(classify)?;
            write_cluster_outputs(dir, &run, catalog.as_ref())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct IndexDoc<'a> {
    station: &'a StationId,
    window: &'a str,
    adms: f64,
    adme: f64,
    capacity_proxy: f64,
    category_by_adms: u8,
    category_by_adme: u8,
    category_combined: u8,
    self_balanced: bool,
}

impl<'a> From<&'a BalanceIndex> for IndexDoc<'a> {
    fn from(i: &'a BalanceIndex) -> Self {
        Self {
            station: &i.station,
            window: &i.window,
            adms: round6(i.adms),
            adme: round6(i.adme),
            capacity_proxy: round6(i.capacity_proxy()),
            category_by_adms: i.category_by_adms,
            category_by_adme: i.category_by_adme,
            category_combined: i.category_combined,
            self_balanced: i.self_balanced,
        }
    }
}

#[derive(Serialize)]
struct BalanceDoc<'a> {
    schema_version: u32,
    quarter: Quarter,
    indices: Vec<IndexDoc<'a>>,
}

pub fn balance(config: &RunConfig) -> Result<(), Failure> {
    let prepared = load(config)?;
    let catalog = load_catalog(config)?;
    let dir = output_dir(config)?;
    for q in selected_quarters(config, &prepared)? {
        let events = prepared.quarter(q).map_err(classify)?;
        let indices =
            pipeline::run_balance(events, &config.windows, &config.categories).map_err(classify)?;
        write_file(&dir.join(format!("{q}_balance.csv")), |w| {
            Ok(write_balance_csv(w, &indices)?)
        })?;
        write_json(
            &dir.join(format!("{q}_balance.json")),
            &BalanceDoc {
                schema_version: SCHEMA_VERSION,
                quarter: q,
                indices: indices.iter().map(IndexDoc::from).collect(),
            },
        )?;
        write_json(
            &dir.join(format!("{q}_balance_summary.json")),
            &balance_summary(q, &indices, config.categories.categories),
        )?;
        for w in &config.windows {
            let subset: Vec<BalanceIndex> = indices
                .iter()
                .filter(|i| i.window == w.label)
                .cloned()
                .collect();
            let fraction = self_balanced_fraction(&subset).map_err(Failure::pipeline)?;
            println!(
                "{q} {:<10} stations = {:>4}  self-balanced = {:.1}%",
                w.label,
                subset.len(),
                fraction * 100.0
            );
            if let Some(catalog) = &catalog {
                for mode in CategoryMode::ALL {
                    let map = export_balance_geojson(catalog, &subset, mode)
                        .map_err(Failure::pipeline)?;
                    write_geojson(
                        &dir.join(format!("{q}_{}_{}.geojson", w.label, mode.as_str())),
                        &map,
                    )?;
                }
            }
        }
    }
    Ok(())
}

pub struct SynthRequest {
    pub spec: Option<PathBuf>,
    pub stations_per_archetype: usize,
    pub start: NaiveDate,
    pub days: u32,
    pub daily_volume: f64,
    pub noise: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    archetype: Vec<ArchetypeSpec>,
}

fn read_spec(path: &Path) -> anyhow::Result<Vec<ArchetypeSpec>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let specs = if is_json {
        serde_json::from_str(&text)?
    } else {
        toml::from_str::<SpecFile>(&text)?.archetype
    };
    Ok(specs)
}

#[derive(Serialize)]
struct StationRow<'a> {
    id: &'a StationId,
    name: &'a str,
    lat: f64,
    lon: f64,
}

pub fn synth(config: &RunConfig, req: &SynthRequest) -> Result<(), Failure> {
    let archetypes = match &req.spec {
        Some(path) => read_spec(path)
            .with_context(|| format!("archetype spec {}", path.display()))
            .map_err(Failure::config)?,
        None => standard_archetypes(req.daily_volume, req.noise),
    };
    if req.days == 0 {
        return Err(Failure::config(anyhow!("--days must be at least 1")));
    }
    let last = req.start + chrono::Duration::days(req.days as i64 - 1);
    let span = DateSpan::new(req.start, last).expect("last >= start");
    let (trips, truth) = generate_trips(&archetypes, req.stations_per_archetype, span, config.seed)
        .map_err(Failure::config)?;
    let dir = output_dir(config)?;
    write_file(&dir.join("synth_trips.csv"), |w| {
        write_trips(w, &trips, &config.parse).map_err(|e: IngestError| anyhow!(e))
    })?;
    write_json(&dir.join("synth_truth.json"), &truth)?;
    let catalog = synthetic_catalog(&truth);
    write_file(&dir.join("synth_stations.csv"), |w| {
        let mut csv = csv::Writer::from_writer(w);
        for s in &catalog {
            csv.serialize(StationRow {
                id: &s.id,
                name: &s.name,
                lat: s.latitude,
                lon: s.longitude,
            })?;
        }
        csv.flush()?;
        Ok(())
    })?;
    println!(
        "{} trips for {} stations over {} days written to {}",
        trips.len(),
        truth.station_archetype.len(),
        req.days,
        dir.display()
    );
    Ok(())
}
