use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::palette::cluster_color;
use super::ReportError;
use crate::cluster::ClusterModel;
use crate::ingest::DayType;
use crate::profiles::{FEATURE_DIM, HOURS};

/// Share of a cluster center's daily events in one hour bin, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterProfileRow {
    pub cluster: usize,
    pub day_type: DayType,
    /// 1-based bin: hour `(hour - 1, hour]`.
    pub hour: usize,
    pub percentage: f64,
}

/// Rows ordered by cluster, weekday before weekend, then hour.
pub fn center_profiles(model: &ClusterModel) -> Result<Vec<CenterProfileRow>, ReportError> {
    let mut rows = Vec::with_capacity(model.k * FEATURE_DIM);
    for (cluster, c) in model.centroids.iter().enumerate() {
        if c.len() != FEATURE_DIM {
            return Err(ReportError::Table(format!(
                "centroid {cluster} has {} components, expected {FEATURE_DIM}",
                c.len()
            )));
        }
        for (half, day_type) in [DayType::Weekday, DayType::Weekend].into_iter().enumerate() {
            for hour in 1..=HOURS {
                rows.push(CenterProfileRow {
                    cluster,
                    day_type,
                    hour,
                    percentage: c[half * HOURS + hour - 1] * 100.0,
                });
            }
        }
    }
    Ok(rows)
}

fn day_type_str(d: DayType) -> &'static str {
    match d {
        DayType::Weekday => "weekday",
        DayType::Weekend => "weekend",
    }
}

/// `cluster,day_type,hour,percentage` with six decimals.
pub fn write_center_profiles_csv<W: Write>(
    sink: W,
    rows: &[CenterProfileRow],
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["cluster", "day_type", "hour", "percentage"])?;
    for r in rows {
        w.write_record([
            r.cluster.to_string(),
            day_type_str(r.day_type).to_owned(),
            r.hour.to_string(),
            format!("{:.6}", r.percentage),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_center_profiles_csv<R: Read>(source: R) -> Result<Vec<CenterProfileRow>, ReportError> {
    let mut r = csv::Reader::from_reader(source);
    if r.headers()?.iter().collect::<Vec<_>>() != ["cluster", "day_type", "hour", "percentage"] {
        return Err(ReportError::Table(
            "unexpected center-profile header".into(),
        ));
    }
    let bad = |what: &str, v: &str| ReportError::Table(format!("bad {what} `{v}`"));
    r.records()
        .map(|rec| {
            let rec = rec?;
            let day_type = match &rec[1] {
                "weekday" => DayType::Weekday,
                "weekend" => DayType::Weekend,
                v => return Err(bad("day type", v)),
            };
            Ok(CenterProfileRow {
                cluster: rec[0].parse().map_err(|_| bad("cluster", &rec[0]))?,
                day_type,
                hour: rec[2].parse().map_err(|_| bad("hour", &rec[2]))?,
                percentage: rec[3].parse().map_err(|_| bad("percentage", &rec[3]))?,
            })
        })
        .collect()
}

/// `cluster,cluster_number,size,color`, one row per cluster.
pub fn write_cluster_sizes_csv<W: Write>(sink: W, model: &ClusterModel) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["cluster", "cluster_number", "size", "color"])?;
    for (c, size) in model.sizes().into_iter().enumerate() {
        w.write_record([
            c.to_string(),
            (c + 1).to_string(),
            size.to_string(),
            cluster_color(c).name.to_owned(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
