//! Canonical in-memory data model: catch records, the frozen catalog and
//! the filter predicate applied uniformly by every downstream product.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IngestReport;

/// Version tag written into catalog artifacts and reports.
pub const SCHEMA_VERSION: &str = "catchmap/1";

/// Upper sanity bound on recorded whale lengths, in feet.
pub const MAX_LENGTH_FT: f64 = 120.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("record {record_id}: latitude {lat} outside [-90, 90]")]
    Latitude { record_id: u64, lat: f64 },
    #[error("record {record_id}: longitude {lon} outside [-180, 180)")]
    Longitude { record_id: u64, lon: f64 },
    #[error("record {record_id}: length {length_ft} ft outside (0, 120]")]
    Length { record_id: u64, length_ft: f64 },
    #[error("duplicate record_id {0}")]
    DuplicateId(u64),
}

macro_rules! code_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => $code:literal $(| $alias:literal)*),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Canonical lowercase code used in CSV, query strings and JSON.
            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            /// Strict lookup of a canonical code or one of its accepted aliases
            /// (case-insensitive).
            pub fn from_code(raw: &str) -> Option<Self> {
                let lower = raw.trim().to_ascii_lowercase();
                match lower.as_str() {
                    $($code $(| $alias)* => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                Self::from_code(s).ok_or_else(|| format!("unknown {} code '{}'", stringify!($name).to_lowercase(), s))
            }
        }
    };
}

code_enum!(
    /// Whale species. Blank codes become `Unknown`; unrecognised non-blank
    /// codes become `Other` at ingest.
    Species {
        Blue => "blue" | "bl",
        Fin => "fin" | "fn",
        Sei => "sei",
        Minke => "minke" | "mi",
        Sperm => "sperm" | "sp",
        Humpback => "humpback" | "hb",
        Right => "right" | "ri",
        Bryde => "bryde" | "brydes",
        Gray => "gray" | "grey",
        Bowhead => "bowhead" | "bh",
        Other => "other",
        Unknown => "unknown",
    }
);

code_enum!(
    Sex {
        Female => "female" | "f",
        Male => "male" | "m",
        Unknown => "unknown" | "u",
    }
);

code_enum!(
    /// Shore-station versus factory-ship operation.
    ExpeditionType {
        Land => "land" | "l" | "shore",
        Pelagic => "pelagic" | "p" | "factory",
        Unknown => "unknown" | "u",
    }
);

/// One validated catch event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatchRecord {
    pub record_id: u64,
    pub expedition_id: String,
    pub date: NaiveDate,
    pub lat: f64,
    pub lon: f64,
    pub species: Species,
    pub sex: Sex,
    pub length_ft: Option<f64>,
    pub nation: String,
    pub expedition_type: ExpeditionType,
    pub source_line: u64,
}

impl CatchRecord {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(ModelError::Latitude { record_id: self.record_id, lat: self.lat });
        }
        if !(-180.0..180.0).contains(&self.lon) {
            return Err(ModelError::Longitude { record_id: self.record_id, lon: self.lon });
        }
        if let Some(len) = self.length_ft {
            if !(len > 0.0 && len <= MAX_LENGTH_FT) {
                return Err(ModelError::Length { record_id: self.record_id, length_ft: len });
            }
        }
        Ok(())
    }

    /// Equality ignoring `record_id`.
    pub fn same_fields(&self, other: &CatchRecord) -> bool {
        CatchRecord { record_id: other.record_id, ..self.clone() } == *other
    }
}

/// Frozen, ordered collection of validated records.
///
/// Iteration order is ingestion order and `record_id`s are unique. There is
/// no mutation API once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    records: Vec<CatchRecord>,
    schema_version: String,
    ingest_report: IngestReport,
}

impl Catalog {
    pub fn new(records: Vec<CatchRecord>, ingest_report: IngestReport) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &records {
            rec.validate()?;
            if !seen.insert(rec.record_id) {
                return Err(ModelError::DuplicateId(rec.record_id));
            }
        }
        Ok(Self { records, schema_version: SCHEMA_VERSION.to_string(), ingest_report })
    }

    /// Catalog over already-validated records, with a report that counts
    /// every record as accepted.
    pub fn from_records(records: Vec<CatchRecord>) -> Result<Self, ModelError> {
        let report = IngestReport::all_accepted(records.len() as u64);
        Self::new(records, report)
    }

    pub fn records(&self) -> &[CatchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    pub fn ingest_report(&self) -> &IngestReport {
        &self.ingest_report
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CatchRecord> {
        self.records.iter()
    }

    pub fn filtered<'a>(&'a self, filter: &'a FilterSpec) -> impl Iterator<Item = &'a CatchRecord> + 'a {
        self.records.iter().filter(move |r| filter.matches(r))
    }

    pub fn count_matching(&self, filter: &FilterSpec) -> usize {
        crate::par::count_matching(&self.records, filter)
    }
}

impl<'a> IntoIterator for &'a Catalog {
    type Item = &'a CatchRecord;
    type IntoIter = std::slice::Iter<'a, CatchRecord>;
    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Inclusive date interval; either end may be open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DateRange {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl DateRange {
    pub fn new(start: Option<NaiveDate>, end: Option<NaiveDate>) -> Self {
        Self { start, end }
    }

    pub fn between(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start: Some(start), end: Some(end) }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start.is_none_or(|s| d >= s) && self.end.is_none_or(|e| d <= e)
    }

    /// True when `[from, to]` shares at least one day with this range.
    pub fn intersects(&self, from: NaiveDate, to: NaiveDate) -> bool {
        self.start.is_none_or(|s| to >= s) && self.end.is_none_or(|e| from <= e)
    }

    pub fn intersect(&self, other: &DateRange) -> DateRange {
        DateRange {
            start: max_opt(self.start, other.start),
            end: min_opt(self.end, other.end),
        }
    }

    pub fn is_ordered(&self) -> bool {
        match (self.start, self.end) {
            (Some(s), Some(e)) => s <= e,
            _ => true,
        }
    }
}

/// Inclusive length interval in feet; either end may be open.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LengthRange {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl LengthRange {
    pub fn contains(&self, len: f64) -> bool {
        self.min.is_none_or(|m| len >= m) && self.max.is_none_or(|m| len <= m)
    }

    pub fn intersect(&self, other: &LengthRange) -> LengthRange {
        LengthRange {
            min: max_opt_f(self.min, other.min),
            max: min_opt_f(self.max, other.max),
        }
    }
}

/// Geographic box. `lon_min > lon_max` denotes an interval wrapping the
/// antimeridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Self {
        Self { lat_min, lat_max, lon_min, lon_max }
    }

    pub fn wraps(&self) -> bool {
        self.lon_min > self.lon_max
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        if lat < self.lat_min || lat > self.lat_max {
            return false;
        }
        if self.wraps() {
            lon >= self.lon_min || lon <= self.lon_max
        } else {
            lon >= self.lon_min && lon <= self.lon_max
        }
    }

    /// Longitude intervals covered, as non-wrapping `[lo, hi]` pieces.
    fn lon_pieces(&self) -> Vec<(f64, f64)> {
        if self.wraps() {
            vec![(self.lon_min, 180.0), (-180.0, self.lon_max)]
        } else {
            vec![(self.lon_min, self.lon_max)]
        }
    }

    /// Intersection of two boxes, or `None` when the longitude overlap
    /// splits into two disjoint pieces that a single box cannot express.
    /// An empty intersection is returned as a box with `lat_min > lat_max`.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let lat_min = self.lat_min.max(other.lat_min);
        let lat_max = self.lat_max.min(other.lat_max);
        let mut pieces = Vec::new();
        for (a0, a1) in self.lon_pieces() {
            for (b0, b1) in other.lon_pieces() {
                let lo = a0.max(b0);
                let hi = a1.min(b1);
                if lo <= hi {
                    pieces.push((lo, hi));
                }
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        match pieces.as_slice() {
            [] => Some(BBox::new(1.0, -1.0, 0.0, 0.0)),
            [(lo, hi)] => Some(BBox::new(lat_min, lat_max, *lo, *hi)),
            // both inputs wrap: the pieces meet again across the antimeridian
            [(-180.0, hi), (lo, 180.0)] => Some(BBox::new(lat_min, lat_max, *lo, *hi)),
            _ => None,
        }
    }
}

/// Conjunction of optional attribute predicates. The default value matches
/// every record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterSpec {
    pub species: Option<BTreeSet<Species>>,
    pub sex: Option<BTreeSet<Sex>>,
    pub date_range: Option<DateRange>,
    pub bbox: Option<BBox>,
    pub nations: Option<BTreeSet<String>>,
    pub expedition_types: Option<BTreeSet<ExpeditionType>>,
    pub length_range_ft: Option<LengthRange>,
    pub expedition_ids: Option<BTreeSet<String>>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        *self == FilterSpec::default()
    }

    pub fn matches(&self, r: &CatchRecord) -> bool {
        if let Some(set) = &self.species {
            if !set.contains(&r.species) {
                return false;
            }
        }
        if let Some(set) = &self.sex {
            if !set.contains(&r.sex) {
                return false;
            }
        }
        if let Some(range) = &self.date_range {
            if !range.contains(r.date) {
                return false;
            }
        }
        if let Some(bbox) = &self.bbox {
            if !bbox.contains(r.lat, r.lon) {
                return false;
            }
        }
        if !self.matches_expedition(&r.expedition_id, &r.nation, r.expedition_type) {
            return false;
        }
        if let Some(range) = &self.length_range_ft {
            match r.length_ft {
                Some(len) if range.contains(len) => {}
                _ => return false,
            }
        }
        true
    }

    /// Evaluates only the expedition-level predicates (nation, expedition
    /// type, expedition ids).
    pub fn matches_expedition(&self, expedition_id: &str, nation: &str, kind: ExpeditionType) -> bool {
        if let Some(set) = &self.nations {
            if !set.contains(nation) {
                return false;
            }
        }
        if let Some(set) = &self.expedition_types {
            if !set.contains(&kind) {
                return false;
            }
        }
        if let Some(set) = &self.expedition_ids {
            if !set.contains(expedition_id) {
                return false;
            }
        }
        true
    }

    /// Predicate-wise intersection: `a.intersect(b).matches(r) ==
    /// a.matches(r) && b.matches(r)`. Returns `None` only when the two bboxes
    /// overlap in two disjoint longitude pieces.
    pub fn intersect(&self, other: &FilterSpec) -> Option<FilterSpec> {
        let bbox = match (&self.bbox, &other.bbox) {
            (Some(a), Some(b)) => Some(a.intersect(b)?),
            (a, b) => a.or(*b),
        };
        Some(FilterSpec {
            species: intersect_sets(&self.species, &other.species),
            sex: intersect_sets(&self.sex, &other.sex),
            date_range: merge_opt(self.date_range, other.date_range, |a, b| a.intersect(&b)),
            bbox,
            nations: intersect_sets(&self.nations, &other.nations),
            expedition_types: intersect_sets(&self.expedition_types, &other.expedition_types),
            length_range_ft: merge_opt(self.length_range_ft, other.length_range_ft, |a, b| a.intersect(&b)),
            expedition_ids: intersect_sets(&self.expedition_ids, &other.expedition_ids),
        })
    }
}

fn intersect_sets<T: Ord + Clone>(a: &Option<BTreeSet<T>>, b: &Option<BTreeSet<T>>) -> Option<BTreeSet<T>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.intersection(b).cloned().collect()),
        (Some(s), None) | (None, Some(s)) => Some(s.clone()),
        (None, None) => None,
    }
}

fn merge_opt<T>(a: Option<T>, b: Option<T>, f: impl FnOnce(T, T) -> T) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(f(a, b)),
        (a, b) => a.or(b),
    }
}

fn max_opt<T: Ord>(a: Option<T>, b: Option<T>) -> Option<T> {
    merge_opt(a, b, std::cmp::max)
}

fn min_opt<T: Ord>(a: Option<T>, b: Option<T>) -> Option<T> {
    merge_opt(a, b, std::cmp::min)
}

fn max_opt_f(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    merge_opt(a, b, f64::max)
}

fn min_opt_f(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    merge_opt(a, b, f64::min)
}
