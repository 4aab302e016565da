//! Equal-angle lat/lon binning, aggregation levels and histograms.

use std::collections::BTreeMap;
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classes::ColorEncoding;
use crate::model::{Catalog, CatchRecord, FilterSpec, Sex, Species};
use crate::par::{self, Exec, CHUNK};

#[derive(Debug, Error, PartialEq)]
pub enum AggError {
    #[error("bin size {0}° not supported (expected 1, 2, 5 or 10)")]
    BinSize(String),
    #[error("aggregation level {0} not supported (expected 0..=3)")]
    Level(String),
    #[error("interval must be a whole number of years >= 1")]
    Interval,
    #[error("length bucket must be a positive number of feet")]
    Bucket,
    #[error("bin size mismatch: {0}° vs {1}°")]
    BinMismatch(u32, u32),
}

/// Grid cell size in whole degrees; one of 1, 2, 5, 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BinSize(u32);

impl BinSize {
    pub const ALLOWED: [u32; 4] = [1, 2, 5, 10];

    pub fn new(deg: u32) -> Result<Self, AggError> {
        if Self::ALLOWED.contains(&deg) {
            Ok(Self(deg))
        } else {
            Err(AggError::BinSize(deg.to_string()))
        }
    }

    pub fn degrees(self) -> u32 {
        self.0
    }

    pub fn rows(self) -> u32 {
        180 / self.0
    }

    pub fn cols(self) -> u32 {
        360 / self.0
    }

    /// South-west corner `(lat, lon)` of cell `(i, j)`.
    pub fn cell_origin(self, i: u32, j: u32) -> (f64, f64) {
        let d = self.0 as f64;
        (i as f64 * d - 90.0, j as f64 * d - 180.0)
    }
}

impl TryFrom<u32> for BinSize {
    type Error = AggError;
    fn try_from(v: u32) -> Result<Self, AggError> {
        BinSize::new(v)
    }
}

impl From<BinSize> for u32 {
    fn from(b: BinSize) -> u32 {
        b.0
    }
}

impl fmt::Display for BinSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type CellIndex = (u32, u32);

/// `i = floor((lat + 90) / bin)`, `j = floor((lon + 180) / bin)`; lat = 90
/// clamps into the top row.
pub fn bin_index(lat: f64, lon: f64, bin: BinSize) -> CellIndex {
    let d = bin.0 as f64;
    let i = ((lat + 90.0) / d).floor().clamp(0.0, (bin.rows() - 1) as f64) as u32;
    let j = ((lon + 180.0) / d).floor().clamp(0.0, (bin.cols() - 1) as f64) as u32;
    (i, j)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellAggregate {
    pub count: u64,
    pub by_species: BTreeMap<Species, u64>,
    pub by_sex: BTreeMap<Sex, u64>,
    pub length_count: u64,
    pub length_sum_ft: f64,
    pub mean_length_ft: Option<f64>,
}

impl CellAggregate {
    fn add(&mut self, r: &CatchRecord) {
        self.count += 1;
        *self.by_species.entry(r.species).or_default() += 1;
        *self.by_sex.entry(r.sex).or_default() += 1;
        if let Some(len) = r.length_ft {
            self.length_count += 1;
            self.length_sum_ft += len;
        }
    }

    fn merge(&mut self, other: CellAggregate) {
        self.count += other.count;
        for (k, v) in other.by_species {
            *self.by_species.entry(k).or_default() += v;
        }
        for (k, v) in other.by_sex {
            *self.by_sex.entry(k).or_default() += v;
        }
        self.length_count += other.length_count;
        self.length_sum_ft += other.length_sum_ft;
    }

    fn finish(&mut self) {
        self.mean_length_ft = (self.length_count > 0).then(|| self.length_sum_ft / self.length_count as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCell {
    pub i: u32,
    pub j: u32,
    #[serde(flatten)]
    pub agg: CellAggregate,
}

/// Sparse grid of catch aggregates; cells sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialBinGrid {
    pub bin_deg: BinSize,
    pub total: u64,
    pub cells: Vec<BinnedCell>,
}

impl SpatialBinGrid {
    pub fn get(&self, idx: CellIndex) -> Option<&CellAggregate> {
        self.cells.binary_search_by_key(&idx, |c| (c.i, c.j)).ok().map(|k| &self.cells[k].agg)
    }

    pub fn to_geojson(&self) -> Value {
        cells_geojson(
            self.bin_deg,
            self.cells.iter().map(|c| {
                let mut props = serde_json::to_value(&c.agg).expect("serialisable");
                props["i"] = json!(c.i);
                props["j"] = json!(c.j);
                (c.i, c.j, props)
            }),
        )
    }
}

pub fn bin_catches(catalog: &Catalog, filter: &FilterSpec, bin: BinSize) -> SpatialBinGrid {
    bin_catches_with(Exec::default(), catalog, filter, bin)
}

pub fn bin_catches_with(exec: Exec, catalog: &Catalog, filter: &FilterSpec, bin: BinSize) -> SpatialBinGrid {
    let partials = par::map_chunks(exec, catalog.records(), CHUNK, |chunk| {
        let mut cells: BTreeMap<CellIndex, CellAggregate> = BTreeMap::new();
        for r in chunk.iter().filter(|r| filter.matches(r)) {
            cells.entry(bin_index(r.lat, r.lon, bin)).or_default().add(r);
        }
        cells
    });
    let mut merged: BTreeMap<CellIndex, CellAggregate> = BTreeMap::new();
    for part in partials {
        for (k, agg) in part {
            merged.entry(k).or_default().merge(agg);
        }
    }
    let mut total = 0;
    let cells = merged
        .into_iter()
        .map(|((i, j), mut agg)| {
            agg.finish();
            total += agg.count;
            BinnedCell { i, j, agg }
        })
        .collect();
    SpatialBinGrid { bin_deg: bin, total, cells }
}

/// Aggregation granularity chosen independently of any map zoom:
/// 0 = raw points, 1 = 1°, 2 = 5°, 3 = 10°.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct AggregationLevel(u8);

impl AggregationLevel {
    pub const RAW: AggregationLevel = AggregationLevel(0);

    pub fn new(level: u8) -> Result<Self, AggError> {
        if level <= 3 {
            Ok(Self(level))
        } else {
            Err(AggError::Level(level.to_string()))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn bin(self) -> Option<BinSize> {
        match self.0 {
            0 => None,
            1 => Some(BinSize(1)),
            2 => Some(BinSize(5)),
            _ => Some(BinSize(10)),
        }
    }
}

impl TryFrom<u8> for AggregationLevel {
    type Error = AggError;
    fn try_from(v: u8) -> Result<Self, AggError> {
        AggregationLevel::new(v)
    }
}

impl From<AggregationLevel> for u8 {
    fn from(l: AggregationLevel) -> u8 {
        l.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPoint {
    pub lat: f64,
    pub lon: f64,
    pub count: u64,
    pub dominant_class: String,
    /// Set for raw points only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub record_id: Option<u64>,
}

/// Raw points (level 0, ordered by expedition, date, record id) or one
/// count-weighted centroid per occupied cell (ordered by cell).
pub fn aggregate_points(
    catalog: &Catalog,
    filter: &FilterSpec,
    level: AggregationLevel,
    encoding: ColorEncoding,
) -> Vec<ClusterPoint> {
    let Some(bin) = level.bin() else {
        let mut pts: Vec<&CatchRecord> = catalog.filtered(filter).collect();
        pts.sort_by(|a, b| (&a.expedition_id, a.date, a.record_id).cmp(&(&b.expedition_id, b.date, b.record_id)));
        return pts
            .into_iter()
            .map(|r| ClusterPoint {
                lat: r.lat,
                lon: r.lon,
                count: 1,
                dominant_class: encoding.class_of(r).to_string(),
                record_id: Some(r.record_id),
            })
            .collect();
    };

    #[derive(Default)]
    struct Acc {
        count: u64,
        lat_sum: f64,
        lon_sum: f64,
        classes: BTreeMap<&'static str, u64>,
    }
    let partials = par::map_chunks(Exec::default(), catalog.records(), CHUNK, |chunk| {
        let mut cells: BTreeMap<CellIndex, Acc> = BTreeMap::new();
        for r in chunk.iter().filter(|r| filter.matches(r)) {
            let acc = cells.entry(bin_index(r.lat, r.lon, bin)).or_default();
            acc.count += 1;
            acc.lat_sum += r.lat;
            acc.lon_sum += r.lon;
            *acc.classes.entry(encoding.class_of(r)).or_default() += 1;
        }
        cells
    });
    let mut merged: BTreeMap<CellIndex, Acc> = BTreeMap::new();
    for part in partials {
        for (k, a) in part {
            let m = merged.entry(k).or_default();
            m.count += a.count;
            m.lat_sum += a.lat_sum;
            m.lon_sum += a.lon_sum;
            for (c, n) in a.classes {
                *m.classes.entry(c).or_default() += n;
            }
        }
    }
    merged
        .into_values()
        .map(|a| {
            // BTreeMap iterates classes in lexicographic order, so the first
            // maximum wins ties
            let dominant = a
                .classes
                .iter()
                .fold(None::<(&str, u64)>, |best, (&c, &n)| match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((c, n)),
                })
                .map(|(c, _)| c)
                .unwrap_or_default();
            ClusterPoint {
                lat: a.lat_sum / a.count as f64,
                lon: a.lon_sum / a.count as f64,
                count: a.count,
                dominant_class: dominant.to_string(),
                record_id: None,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBucket {
    pub start_year: i32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineHistogram {
    pub interval_years: u32,
    pub total: u64,
    pub buckets: Vec<TimeBucket>,
}

impl TimelineHistogram {
    /// Start year of the bucket with the highest count (earliest on ties).
    pub fn peak(&self) -> Option<i32> {
        self.buckets
            .iter()
            .fold(None::<&TimeBucket>, |best, b| match best {
                Some(x) if x.count >= b.count => best,
                _ => Some(b),
            })
            .map(|b| b.start_year)
    }
}

fn merge_counts<K: Ord>(parts: Vec<BTreeMap<K, u64>>) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for p in parts {
        for (k, v) in p {
            *out.entry(k).or_default() += v;
        }
    }
    out
}

/// Year buckets `[start, start + interval)` aligned to multiples of the
/// interval; empty buckets inside the data span are emitted with 0.
pub fn timeline_histogram(catalog: &Catalog, filter: &FilterSpec, interval_years: u32) -> Result<TimelineHistogram, AggError> {
    if interval_years == 0 {
        return Err(AggError::Interval);
    }
    let step = interval_years as i32;
    let counts = merge_counts(par::map_chunks(Exec::default(), catalog.records(), CHUNK, |chunk| {
        let mut m: BTreeMap<i32, u64> = BTreeMap::new();
        for r in chunk.iter().filter(|r| filter.matches(r)) {
            *m.entry(r.date.year().div_euclid(step) * step).or_default() += 1;
        }
        m
    }));
    let mut buckets = Vec::new();
    if let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) {
        let mut y = first;
        while y <= last {
            buckets.push(TimeBucket { start_year: y, count: counts.get(&y).copied().unwrap_or(0) });
            y += step;
        }
    }
    let total = buckets.iter().map(|b| b.count).sum();
    Ok(TimelineHistogram { interval_years, total, buckets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub start_ft: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub bucket_ft: f64,
    /// Matching records, with or without a length.
    pub total: u64,
    /// Matching records without a recorded length.
    pub excluded: u64,
    pub buckets: Vec<LengthBucket>,
}

impl LengthHistogram {
    pub fn modal_bucket(&self) -> Option<f64> {
        self.buckets
            .iter()
            .fold(None::<&LengthBucket>, |best, b| match best {
                Some(x) if x.count >= b.count => best,
                _ => Some(b),
            })
            .map(|b| b.start_ft)
    }
}

/// Buckets `[k·w, (k+1)·w)` over recorded lengths; gaps inside the span are
/// emitted with 0.
pub fn length_histogram(catalog: &Catalog, filter: &FilterSpec, bucket_ft: f64) -> Result<LengthHistogram, AggError> {
    if !(bucket_ft.is_finite() && bucket_ft > 0.0) {
        return Err(AggError::Bucket);
    }
    let parts = par::map_chunks(Exec::default(), catalog.records(), CHUNK, |chunk| {
        let mut m: BTreeMap<i64, u64> = BTreeMap::new();
        let mut excluded = 0u64;
        for r in chunk.iter().filter(|r| filter.matches(r)) {
            match r.length_ft {
                Some(len) => *m.entry((len / bucket_ft).floor() as i64).or_default() += 1,
                None => excluded += 1,
            }
        }
        (m, excluded)
    });
    let excluded = parts.iter().map(|p| p.1).sum();
    let counts = merge_counts(parts.into_iter().map(|p| p.0).collect());
    let mut buckets = Vec::new();
    if let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) {
        for k in first..=last {
            buckets.push(LengthBucket { start_ft: k as f64 * bucket_ft, count: counts.get(&k).copied().unwrap_or(0) });
        }
    }
    let total = buckets.iter().map(|b| b.count).sum::<u64>() + excluded;
    Ok(LengthHistogram { bucket_ft, total, excluded, buckets })
}

/// GeoJSON polygons for grid cells, one Feature per `(i, j, properties)`.
pub fn cells_geojson(bin: BinSize, cells: impl Iterator<Item = (u32, u32, Value)>) -> Value {
    let d = bin.degrees() as f64;
    let features: Vec<Value> = cells
        .map(|(i, j, props)| {
            let (lat0, lon0) = bin.cell_origin(i, j);
            let (lat1, lon1) = (lat0 + d, lon0 + d);
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]]
                },
                "properties": props
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
