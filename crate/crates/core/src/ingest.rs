//! CSV ingestion into a [`Catalog`].
//!
//! Rows missing a date or coordinates are rejected; every other defect in an
//! optional column degrades to "unknown"/absent with a warning. Rejection is
//! row-local, so one bad line never aborts a file. The resulting
//! [`IngestReport`] accounts for every data row read.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::canonical_lon;
use crate::model::{Catalog, CatchRecord, ExpeditionType, ModelError, Sex, Species, MAX_LENGTH_FT};
use crate::par::{self, Exec};

pub const FEET_PER_METER: f64 = 3.28084;

/// Detailed warning / rejection entries kept in a report; counts are always
/// complete.
pub const MAX_DETAIL_ENTRIES: usize = 1000;

/// Years outside this span are kept but flagged.
pub const EXPECTED_YEARS: (i32, i32) = (1880, 2020);

/// Day assigned to rows that carry only a year and month.
pub const IMPUTED_DAY: u32 = 15;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: mapped column {column} not found in header")]
    HeaderMismatch { path: PathBuf, column: String },
    #[error("invalid column mapping: {0}")]
    Mapping(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A source column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn describe(&self) -> String {
        match self {
            ColumnRef::Index(i) => format!("#{i}"),
            ColumnRef::Name(n) => format!("'{n}'"),
        }
    }
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DateSource {
    /// One column parsed with `date_format`; `YYYY-MM` values are also
    /// accepted with an imputed mid-month day.
    Column { column: ColumnRef },
    /// Separate year / month / day columns. A blank or zero day is imputed.
    Parts { year: ColumnRef, month: ColumnRef, day: Option<ColumnRef> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordSource {
    Decimal { lat: ColumnRef, lon: ColumnRef },
    /// Whole degrees, decimal minutes and an N/S or E/W hemisphere letter.
    DegreesMinutes {
        lat_deg: ColumnRef,
        lat_min: Option<ColumnRef>,
        lat_hem: ColumnRef,
        lon_deg: ColumnRef,
        lon_min: Option<ColumnRef>,
        lon_hem: ColumnRef,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Feet,
    Meters,
}

fn default_date_format() -> String {
    "%Y-%m-%d".to_string()
}

/// How the columns of a source file map onto [`CatchRecord`] fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub expedition_id: ColumnRef,
    pub date: DateSource,
    pub coords: CoordSource,
    #[serde(default)]
    pub species: Option<ColumnRef>,
    #[serde(default)]
    pub sex: Option<ColumnRef>,
    #[serde(default)]
    pub length: Option<ColumnRef>,
    #[serde(default)]
    pub nation: Option<ColumnRef>,
    #[serde(default)]
    pub expedition_type: Option<ColumnRef>,
    /// Provenance column; when unmapped the physical line number is used.
    #[serde(default)]
    pub source_line: Option<ColumnRef>,
    #[serde(default = "default_date_format")]
    pub date_format: String,
    #[serde(default)]
    pub length_unit: LengthUnit,
    /// Raw code → species, consulted before the built-in names.
    #[serde(default)]
    pub species_codes: BTreeMap<String, Species>,
    #[serde(default)]
    pub sex_codes: BTreeMap<String, Sex>,
    #[serde(default)]
    pub expedition_type_codes: BTreeMap<String, ExpeditionType>,
}

impl ColumnMapping {
    /// Mapping for the canonical export layout (see [`crate::export`]).
    pub fn canonical() -> Self {
        Self {
            expedition_id: "expedition_id".into(),
            date: DateSource::Column { column: "date".into() },
            coords: CoordSource::Decimal { lat: "lat".into(), lon: "lon".into() },
            species: Some("species".into()),
            sex: Some("sex".into()),
            length: Some("length_ft".into()),
            nation: Some("nation".into()),
            expedition_type: Some("expedition_type".into()),
            source_line: Some("source_line".into()),
            date_format: default_date_format(),
            length_unit: LengthUnit::Feet,
            species_codes: BTreeMap::new(),
            sex_codes: BTreeMap::new(),
            expedition_type_codes: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Mapping(e.to_string()))
    }

    /// Binds every mapped column to a position in `header`.
    pub fn resolve(&self, header: &csv::StringRecord, path: &Path) -> Result<RowLayout, IngestError> {
        let find = |col: &ColumnRef| -> Result<usize, IngestError> {
            let idx = match col {
                ColumnRef::Index(i) => (*i < header.len()).then_some(*i),
                ColumnRef::Name(n) => header.iter().position(|h| h.trim() == n),
            };
            idx.ok_or_else(|| IngestError::HeaderMismatch { path: path.to_path_buf(), column: col.describe() })
        };
        let find_opt = |col: &Option<ColumnRef>| col.as_ref().map(find).transpose();

        let date = match &self.date {
            DateSource::Column { column } => DateLayout::Column(find(column)?),
            DateSource::Parts { year, month, day } => DateLayout::Parts {
                year: find(year)?,
                month: find(month)?,
                day: find_opt(day)?,
            },
        };
        let coords = match &self.coords {
            CoordSource::Decimal { lat, lon } => CoordLayout::Decimal { lat: find(lat)?, lon: find(lon)? },
            CoordSource::DegreesMinutes { lat_deg, lat_min, lat_hem, lon_deg, lon_min, lon_hem } => {
                CoordLayout::DegreesMinutes {
                    lat: [Some(find(lat_deg)?), find_opt(lat_min)?, Some(find(lat_hem)?)],
                    lon: [Some(find(lon_deg)?), find_opt(lon_min)?, Some(find(lon_hem)?)],
                }
            }
        };
        Ok(RowLayout {
            expedition_id: find(&self.expedition_id)?,
            date,
            coords,
            species: find_opt(&self.species)?,
            sex: find_opt(&self.sex)?,
            length: find_opt(&self.length)?,
            nation: find_opt(&self.nation)?,
            expedition_type: find_opt(&self.expedition_type)?,
            source_line: find_opt(&self.source_line)?,
            date_format: self.date_format.clone(),
            length_unit: self.length_unit,
            species_codes: self.species_codes.clone(),
            sex_codes: self.sex_codes.clone(),
            expedition_type_codes: self.expedition_type_codes.clone(),
        })
    }
}

#[derive(Debug, Clone)]
enum DateLayout {
    Column(usize),
    Parts { year: usize, month: usize, day: Option<usize> },
}

#[derive(Debug, Clone)]
enum CoordLayout {
    Decimal { lat: usize, lon: usize },
    DegreesMinutes { lat: [Option<usize>; 3], lon: [Option<usize>; 3] },
}

/// A [`ColumnMapping`] bound to the column positions of one header.
#[derive(Debug, Clone)]
pub struct RowLayout {
    expedition_id: usize,
    date: DateLayout,
    coords: CoordLayout,
    species: Option<usize>,
    sex: Option<usize>,
    length: Option<usize>,
    nation: Option<usize>,
    expedition_type: Option<usize>,
    source_line: Option<usize>,
    date_format: String,
    length_unit: LengthUnit,
    species_codes: BTreeMap<String, Species>,
    sex_codes: BTreeMap<String, Sex>,
    expedition_type_codes: BTreeMap<String, ExpeditionType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingDate,
    MissingCoords,
    MalformedField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    ImputedDay,
    DateOutsideExpectedSpan,
    LengthDiscarded,
    UnrecognisedCode,
    BadSourceLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRejection {
    pub reason: RejectReason,
    pub field: String,
    pub detail: String,
}

impl RowRejection {
    fn new(reason: RejectReason, field: &str, detail: impl Into<String>) -> Self {
        Self { reason, field: field.to_string(), detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowWarning {
    pub kind: WarningKind,
    pub field: String,
    pub detail: String,
}

/// A row that became a record, with any non-fatal issues found on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub record: CatchRecord,
    pub warnings: Vec<RowWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestIssue<T> {
    pub file: String,
    pub line: u64,
    #[serde(flatten)]
    pub issue: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub schema_version: String,
    pub files: Vec<String>,
    pub total_rows: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub rejection_rate: f64,
    pub rejection_breakdown: BTreeMap<RejectReason, u64>,
    pub warning_counts: BTreeMap<WarningKind, u64>,
    /// First [`MAX_DETAIL_ENTRIES`] rejections.
    pub rejections: Vec<IngestIssue<RowRejection>>,
    /// First [`MAX_DETAIL_ENTRIES`] warnings.
    pub warnings: Vec<IngestIssue<RowWarning>>,
}

impl IngestReport {
    fn empty() -> Self {
        Self {
            schema_version: crate::model::SCHEMA_VERSION.to_string(),
            files: Vec::new(),
            total_rows: 0,
            accepted: 0,
            rejected: 0,
            rejection_rate: 0.0,
            rejection_breakdown: BTreeMap::new(),
            warning_counts: BTreeMap::new(),
            rejections: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn all_accepted(n: u64) -> Self {
        let mut r = Self::empty();
        r.total_rows = n;
        r.accepted = n;
        r
    }

    fn absorb(&mut self, other: FileOutcome, accepted: u64) {
        self.files.push(other.file);
        self.total_rows += other.total_rows;
        for rej in other.rejections {
            self.rejected += 1;
            *self.rejection_breakdown.entry(rej.issue.reason).or_default() += 1;
            if self.rejections.len() < MAX_DETAIL_ENTRIES {
                self.rejections.push(rej);
            }
        }
        for w in other.warnings {
            *self.warning_counts.entry(w.issue.kind).or_default() += 1;
            if self.warnings.len() < MAX_DETAIL_ENTRIES {
                self.warnings.push(w);
            }
        }
        self.accepted += accepted;
    }

    fn finish(&mut self) {
        self.rejection_rate = if self.total_rows == 0 { 0.0 } else { self.rejected as f64 / self.total_rows as f64 };
    }
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize) -> &'a str {
    row.get(idx).map(str::trim).unwrap_or("")
}

fn opt_field(row: &csv::StringRecord, idx: Option<usize>) -> &str {
    idx.map(|i| field(row, i)).unwrap_or("")
}

/// Turns one CSV row into a record or a rejection.
///
/// `line` is the physical line number, used for `source_line` unless the
/// layout maps a provenance column.
pub fn parse_catch_row(
    row: &csv::StringRecord,
    layout: &RowLayout,
    next_id: u64,
    line: u64,
) -> Result<ParsedRow, RowRejection> {
    let mut warnings = Vec::new();
    let warn = |warnings: &mut Vec<RowWarning>, kind, field: &str, detail: String| {
        warnings.push(RowWarning { kind, field: field.to_string(), detail })
    };

    // missingness first, so a row with neither date nor position is a
    // missing_date rejection regardless of how malformed the rest is
    let date_present = match &layout.date {
        DateLayout::Column(i) => !field(row, *i).is_empty(),
        DateLayout::Parts { year, month, .. } => {
            !field(row, *year).is_empty() && !matches!(field(row, *month), "" | "0" | "00")
        }
    };
    if !date_present {
        return Err(RowRejection::new(RejectReason::MissingDate, "date", "no year/month"));
    }
    let coords_present = match &layout.coords {
        CoordLayout::Decimal { lat, lon } => !field(row, *lat).is_empty() && !field(row, *lon).is_empty(),
        CoordLayout::DegreesMinutes { lat, lon } => {
            !opt_field(row, lat[0]).is_empty() && !opt_field(row, lon[0]).is_empty()
        }
    };
    if !coords_present {
        return Err(RowRejection::new(RejectReason::MissingCoords, "coords", "blank latitude or longitude"));
    }

    let expedition_id = field(row, layout.expedition_id);
    if expedition_id.is_empty() {
        return Err(RowRejection::new(RejectReason::MalformedField, "expedition_id", "blank"));
    }

    let (date, imputed) = parse_date(row, layout)?;
    if imputed {
        warn(&mut warnings, WarningKind::ImputedDay, "date", format!("day set to {IMPUTED_DAY}"));
    }
    if date.year() < EXPECTED_YEARS.0 || date.year() > EXPECTED_YEARS.1 {
        warn(&mut warnings, WarningKind::DateOutsideExpectedSpan, "date", date.to_string());
    }

    let (lat, lon) = parse_coords(row, layout)?;

    let length_ft = match opt_field(row, layout.length) {
        "" => None,
        raw => match raw.parse::<f64>() {
            Ok(v) => {
                let ft = match layout.length_unit {
                    LengthUnit::Feet => v,
                    LengthUnit::Meters => v * FEET_PER_METER,
                };
                if ft > 0.0 && ft <= MAX_LENGTH_FT {
                    Some(ft)
                } else {
                    warn(&mut warnings, WarningKind::LengthDiscarded, "length", format!("{raw} out of range"));
                    None
                }
            }
            Err(_) => {
                warn(&mut warnings, WarningKind::LengthDiscarded, "length", format!("unparseable '{raw}'"));
                None
            }
        },
    };

    let species = match opt_field(row, layout.species) {
        "" => Species::Unknown,
        raw => match layout.species_codes.get(raw).copied().or_else(|| Species::from_code(raw)) {
            Some(s) => s,
            None => {
                warn(&mut warnings, WarningKind::UnrecognisedCode, "species", raw.to_string());
                Species::Other
            }
        },
    };
    let sex = match opt_field(row, layout.sex) {
        "" => Sex::Unknown,
        raw => match layout.sex_codes.get(raw).copied().or_else(|| Sex::from_code(raw)) {
            Some(s) => s,
            None => {
                warn(&mut warnings, WarningKind::UnrecognisedCode, "sex", raw.to_string());
                Sex::Unknown
            }
        },
    };
    let expedition_type = match opt_field(row, layout.expedition_type) {
        "" => ExpeditionType::Unknown,
        raw => match layout.expedition_type_codes.get(raw).copied().or_else(|| ExpeditionType::from_code(raw)) {
            Some(t) => t,
            None => {
                warn(&mut warnings, WarningKind::UnrecognisedCode, "expedition_type", raw.to_string());
                ExpeditionType::Unknown
            }
        },
    };

    let source_line = match opt_field(row, layout.source_line) {
        "" => line,
        raw => raw.parse::<u64>().unwrap_or_else(|_| {
            warn(&mut warnings, WarningKind::BadSourceLine, "source_line", raw.to_string());
            line
        }),
    };

    let record = CatchRecord {
        record_id: next_id,
        expedition_id: expedition_id.to_string(),
        date,
        lat,
        lon,
        species,
        sex,
        length_ft,
        nation: opt_field(row, layout.nation).to_string(),
        expedition_type,
        source_line,
    };
    debug_assert!(record.validate().is_ok());
    Ok(ParsedRow { record, warnings })
}

fn parse_date(row: &csv::StringRecord, layout: &RowLayout) -> Result<(NaiveDate, bool), RowRejection> {
    let malformed = |detail: String| RowRejection::new(RejectReason::MalformedField, "date", detail);
    match &layout.date {
        DateLayout::Column(i) => {
            let raw = field(row, *i);
            if let Ok(d) = NaiveDate::parse_from_str(raw, &layout.date_format) {
                return Ok((d, false));
            }
            // year-month only
            let mut parts = raw.splitn(2, ['-', '/']);
            if let (Some(y), Some(m)) = (parts.next(), parts.next()) {
                if y.len() == 4 && (1..=2).contains(&m.len()) {
                    if let (Ok(y), Ok(m)) = (y.parse::<i32>(), m.parse::<u32>()) {
                        if let Some(d) = NaiveDate::from_ymd_opt(y, m, IMPUTED_DAY) {
                            return Ok((d, true));
                        }
                    }
                }
            }
            Err(malformed(format!("'{raw}' does not match {}", layout.date_format)))
        }
        DateLayout::Parts { year, month, day } => {
            let (y, m) = (field(row, *year), field(row, *month));
            let y: i32 = y.parse().map_err(|_| malformed(format!("year '{y}'")))?;
            let m: u32 = m.parse().map_err(|_| malformed(format!("month '{m}'")))?;
            let (d, imputed) = match opt_field(row, *day) {
                "" | "0" | "00" => (IMPUTED_DAY, true),
                raw => (raw.parse::<u32>().map_err(|_| malformed(format!("day '{raw}'")))?, false),
            };
            NaiveDate::from_ymd_opt(y, m, d)
                .map(|date| (date, imputed))
                .ok_or_else(|| malformed(format!("no such date {y}-{m}-{d}")))
        }
    }
}

fn parse_coords(row: &csv::StringRecord, layout: &RowLayout) -> Result<(f64, f64), RowRejection> {
    let (lat, lon) = match &layout.coords {
        CoordLayout::Decimal { lat, lon } => (
            parse_number(field(row, *lat), "lat")?,
            parse_number(field(row, *lon), "lon")?,
        ),
        CoordLayout::DegreesMinutes { lat, lon } => (
            parse_deg_min(row, lat, ('N', 'S'), "lat")?,
            parse_deg_min(row, lon, ('E', 'W'), "lon")?,
        ),
    };
    if !(-90.0..=90.0).contains(&lat) {
        return Err(RowRejection::new(RejectReason::MalformedField, "lat", format!("{lat} out of range")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(RowRejection::new(RejectReason::MalformedField, "lon", format!("{lon} out of range")));
    }
    Ok((lat, canonical_lon(lon)))
}

fn parse_number(raw: &str, name: &str) -> Result<f64, RowRejection> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(RowRejection::new(RejectReason::MalformedField, name, format!("'{raw}' is not a number"))),
    }
}

fn parse_deg_min(
    row: &csv::StringRecord,
    cols: &[Option<usize>; 3],
    (pos, neg): (char, char),
    name: &str,
) -> Result<f64, RowRejection> {
    let deg = parse_number(opt_field(row, cols[0]), name)?;
    let min = match opt_field(row, cols[1]) {
        "" => 0.0,
        raw => parse_number(raw, name)?,
    };
    if !(0.0..60.0).contains(&min) || deg < 0.0 {
        return Err(RowRejection::new(RejectReason::MalformedField, name, format!("{deg}° {min}'")));
    }
    let hem = opt_field(row, cols[2]).to_ascii_uppercase();
    let sign = match hem.chars().next() {
        Some(c) if c == pos && hem.len() == 1 => 1.0,
        Some(c) if c == neg && hem.len() == 1 => -1.0,
        _ => return Err(RowRejection::new(RejectReason::MalformedField, name, format!("hemisphere '{hem}'"))),
    };
    Ok(sign * (deg + min / 60.0))
}

struct FileOutcome {
    file: String,
    total_rows: u64,
    /// Records carry file-local ids until merged.
    records: Vec<CatchRecord>,
    rejections: Vec<IngestIssue<RowRejection>>,
    warnings: Vec<IngestIssue<RowWarning>>,
}

fn parse_source<R: Read>(reader: R, path: &Path, mapping: &ColumnMapping) -> Result<FileOutcome, IngestError> {
    let label = path.display().to_string();
    let csv_err = |source| IngestError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let layout = mapping.resolve(&header, path)?;

    let mut out = FileOutcome {
        file: label.clone(),
        total_rows: 0,
        records: Vec::new(),
        rejections: Vec::new(),
        warnings: Vec::new(),
    };
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                out.total_rows += 1;
                let line = row.position().map(|p| p.line()).unwrap_or(0);
                match parse_catch_row(&row, &layout, out.records.len() as u64, line) {
                    Ok(parsed) => {
                        out.warnings.extend(
                            parsed.warnings.into_iter().map(|w| IngestIssue { file: label.clone(), line, issue: w }),
                        );
                        out.records.push(parsed.record);
                    }
                    Err(rej) => out.rejections.push(IngestIssue { file: label.clone(), line, issue: rej }),
                }
            }
            Err(e) if e.is_io_error() => return Err(csv_err(e)),
            Err(e) => {
                // undecodable row: count it and move on
                out.total_rows += 1;
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejections.push(IngestIssue {
                    file: label.clone(),
                    line,
                    issue: RowRejection::new(RejectReason::MalformedField, "row", e.to_string()),
                });
            }
        }
    }
    Ok(out)
}

fn assemble(outcomes: Vec<FileOutcome>) -> Result<(Catalog, IngestReport), IngestError> {
    let mut report = IngestReport::empty();
    let mut records = Vec::with_capacity(outcomes.iter().map(|o| o.records.len()).sum());
    for mut outcome in outcomes {
        let batch = std::mem::take(&mut outcome.records);
        report.absorb(outcome, batch.len() as u64);
        for mut rec in batch {
            rec.record_id = records.len() as u64;
            records.push(rec);
        }
    }
    report.finish();
    let catalog = Catalog::new(records, report.clone())?;
    Ok((catalog, report))
}

/// Ingests files in the given order. Files are parsed concurrently; record
/// ids are assigned afterwards in file-then-line order.
pub fn ingest_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    mapping: &ColumnMapping,
) -> Result<(Catalog, IngestReport), IngestError> {
    let outcomes = par::map(Exec::default(), paths, |p| {
        let path = p.as_ref();
        let file = File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
        parse_source(std::io::BufReader::new(file), path, mapping)
    });
    assemble(outcomes.into_iter().collect::<Result<Vec<_>, _>>()?)
}

/// Like [`ingest_files`] over in-memory sources, labelled by name.
pub fn ingest_readers<R: Read>(
    sources: Vec<(String, R)>,
    mapping: &ColumnMapping,
) -> Result<(Catalog, IngestReport), IngestError> {
    let outcomes = sources
        .into_iter()
        .map(|(name, r)| parse_source(r, Path::new(&name), mapping))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(outcomes)
}
