use std::str::FromStr;

use bikeshare_core::balance::{
    read_balance_csv, standard_windows, write_balance_csv, BalanceIndex, CategoryMode,
    CategoryScheme,
};
use bikeshare_core::ingest::{CleaningRules, EventKind, ParsedTrips, StationCatalog, StationId};
use bikeshare_core::pipeline::{prepare, run_balance, run_clustering, ClusterRun, ClusterSettings};
use bikeshare_core::profiles::{read_profiles_csv, write_profiles_csv};
use bikeshare_core::report::{
    balance_summary, center_profiles, cluster_color, export_balance_geojson,
    export_cluster_geojson, read_center_profiles_csv, write_center_profiles_csv, ReportError,
    SCHEMA_VERSION, SELF_BALANCED_COLOR,
};
use bikeshare_core::synth::{generate_trips, standard_archetypes, synthetic_catalog};
use bikeshare_core::Quarter;
use geojson::{GeoJson, Value as Geometry};

struct Fixture {
    catalog: StationCatalog,
    run: ClusterRun,
    balance: Vec<BalanceIndex>,
    quarter: Quarter,
}

/// Synthetic quarter whose catalog lacks the first two stations.
fn fixture() -> Fixture {
    let quarter = Quarter::new(2015, 3).unwrap();
    let (trips, truth) =
        generate_trips(&standard_archetypes(30.0, 0.1), 8, quarter.span(), 17).unwrap();
    let catalog =
        StationCatalog::from_stations(synthetic_catalog(&truth).into_iter().skip(2)).unwrap();
    let prepared = prepare(
        ParsedTrips {
            trips,
            ..ParsedTrips::default()
        },
        &CleaningRules::default(),
    );
    let q = prepared.quarter(quarter).unwrap();
    let settings = ClusterSettings {
        k_range: 2..=5,
        seed: 17,
        restarts: 5,
        ..ClusterSettings::default()
    };
    Fixture {
        run: run_clustering(q, EventKind::Pickup, &settings).unwrap(),
        balance: run_balance(q, &standard_windows(), &CategoryScheme::default()).unwrap(),
        catalog,
        quarter,
    }
}

fn features_of(text: &str) -> Vec<geojson::Feature> {
    match GeoJson::from_str(text).expect("valid GeoJSON") {
        GeoJson::FeatureCollection(fc) => fc.features,
        other => panic!("expected a FeatureCollection, got {other:?}"),
    }
}

#[test]
fn cluster_geojson_is_valid_and_complete() {
    let f = fixture();
    let model = &f.run.selection.model;
    let styled = export_cluster_geojson(&f.catalog, model).unwrap();
    assert_eq!(styled.skipped.len(), 2);
    let features = features_of(&styled.to_json_pretty());
    assert_eq!(
        features.len() + styled.skipped.len(),
        model.assignment.len()
    );
    let mut last = String::new();
    for feature in &features {
        let id = feature
            .property("station_id")
            .unwrap()
            .as_str()
            .unwrap()
            .to_owned();
        assert!(id > last, "features sorted by station id");
        last = id.clone();
        let cluster = model.assignment[&StationId::from(id.as_str())];
        assert_eq!(feature.property("cluster").unwrap(), cluster);
        assert_eq!(feature.property("cluster_number").unwrap(), cluster + 1);
        assert_eq!(
            feature.property("color_hex").unwrap(),
            cluster_color(cluster).hex
        );
        let info = f.catalog.get(&StationId::from(id.as_str())).unwrap();
        match &feature.geometry.as_ref().unwrap().value {
            Geometry::Point(c) => {
                assert!((c[0] - info.longitude).abs() <= 5e-7);
                assert!((c[1] - info.latitude).abs() <= 5e-7);
            }
            other => panic!("expected a point, got {other:?}"),
        }
    }
}

#[test]
fn balance_geojson_per_window_and_mode() {
    let f = fixture();
    for w in standard_windows() {
        let indices: Vec<BalanceIndex> = f
            .balance
            .iter()
            .filter(|i| i.window == w.label)
            .cloned()
            .collect();
        for mode in CategoryMode::ALL {
            let styled = export_balance_geojson(&f.catalog, &indices, mode).unwrap();
            let features = features_of(&styled.to_json_pretty());
            assert_eq!(features.len() + styled.skipped.len(), indices.len());
            for feature in &features {
                let id = feature.property("station_id").unwrap().as_str().unwrap();
                let idx = indices.iter().find(|i| i.station.as_str() == id).unwrap();
                assert_eq!(feature.property("category").unwrap(), mode.category(idx));
                assert_eq!(feature.property("window").unwrap(), w.label.as_str());
                let hex = feature.property("color_hex").unwrap();
                if mode == CategoryMode::Combined && idx.self_balanced {
                    assert_eq!(hex, SELF_BALANCED_COLOR.hex);
                } else {
                    assert_ne!(hex, SELF_BALANCED_COLOR.hex);
                }
                let cap = feature
                    .property("capacity_proxy")
                    .unwrap()
                    .as_f64()
                    .unwrap();
                assert!((cap - idx.adms - idx.adme).abs() <= 1e-6);
            }
        }
    }
    assert!(matches!(
        export_balance_geojson(&f.catalog, &f.balance, CategoryMode::Combined),
        Err(ReportError::MixedWindows(_))
    ));
}

#[test]
fn tables_round_trip() {
    let f = fixture();

    let mut buf = Vec::new();
    write_balance_csv(&mut buf, &f.balance).unwrap();
    let back = read_balance_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), f.balance.len());
    for (a, b) in f.balance.iter().zip(&back) {
        assert_eq!((&a.station, &a.window), (&b.station, &b.window));
        assert!((a.adms - b.adms).abs() <= 5e-7 && (a.adme - b.adme).abs() <= 5e-7);
        assert_eq!(
            (
                a.category_by_adms,
                a.category_by_adme,
                a.category_combined,
                a.self_balanced
            ),
            (
                b.category_by_adms,
                b.category_by_adme,
                b.category_combined,
                b.self_balanced
            )
        );
    }

    let profiles = &f.run.profiles.profiles;
    let mut buf = Vec::new();
    write_profiles_csv(&mut buf, profiles).unwrap();
    let back = read_profiles_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), profiles.len());
    for (a, b) in profiles.iter().zip(&back) {
        assert_eq!((&a.station, a.kind), (&b.station, b.kind));
        for (x, y) in a.feature().iter().zip(b.feature()) {
            assert!((x - y).abs() <= 5e-7);
        }
    }

    let rows = center_profiles(&f.run.selection.model).unwrap();
    assert_eq!(rows.len(), f.run.selection.chosen_k * 48);
    let mut buf = Vec::new();
    write_center_profiles_csv(&mut buf, &rows).unwrap();
    let back = read_center_profiles_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(
            (a.cluster, a.day_type, a.hour),
            (b.cluster, b.day_type, b.hour)
        );
        assert!((a.percentage - b.percentage).abs() <= 5e-7);
    }
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let render = || {
        let f = fixture();
        let mut csv = Vec::new();
        write_balance_csv(&mut csv, &f.balance).unwrap();
        let summary =
            serde_json::to_string_pretty(&balance_summary(f.quarter, &f.balance, 8)).unwrap();
        let clusters = export_cluster_geojson(&f.catalog, &f.run.selection.model)
            .unwrap()
            .to_json_pretty();
        (csv, summary, clusters)
    };
    assert!(render() == render());
}

#[test]
fn summaries_carry_schema_version() {
    let f = fixture();
    let summary: serde_json::Value =
        serde_json::to_value(balance_summary(f.quarter, &f.balance, 8)).unwrap();
    assert_eq!(summary["schema_version"], SCHEMA_VERSION);
    assert_eq!(
        summary["windows"].as_array().unwrap().len(),
        standard_windows().len()
    );
    for w in summary["windows"].as_array().unwrap() {
        let counts = w["category_counts"]["combined"].as_array().unwrap();
        let total: u64 = counts.iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, w["station_count"].as_u64().unwrap());
    }
}
