//! Canonical CSV export and the catalog artifact format.
//!
//! The canonical CSV has a fixed header in [`CatchRecord`] field order:
//!
//! ```text
//! record_id,expedition_id,date,lat,lon,species,sex,length_ft,nation,expedition_type,source_line
//! ```
//!
//! Floats are written in shortest round-trip form, so re-ingesting an export
//! with [`ColumnMapping::canonical`] reproduces every field exactly.
//!
//! A catalog artifact is a text file:
//!
//! ```text
//! catchmap-catalog <format version>
//! <IngestReport as one line of JSON>
//! <canonical CSV, header included>
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::ingest::{ingest_readers, ColumnMapping, IngestError, IngestReport};
use crate::model::{Catalog, CatchRecord, ModelError};

pub const CANONICAL_HEADER: [&str; 11] = [
    "record_id",
    "expedition_id",
    "date",
    "lat",
    "lon",
    "species",
    "sex",
    "length_ft",
    "nation",
    "expedition_type",
    "source_line",
];

pub const ARTIFACT_MAGIC: &str = "catchmap-catalog";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("not a catalog artifact (missing '{ARTIFACT_MAGIC}' header)")]
    BadMagic,
    #[error("unsupported artifact version {0}")]
    Version(String),
    #[error("corrupt ingest report: {0}")]
    Report(#[from] serde_json::Error),
    #[error("corrupt record data: {0}")]
    Records(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn record_fields(r: &CatchRecord) -> [String; 11] {
    [
        r.record_id.to_string(),
        r.expedition_id.clone(),
        r.date.format("%Y-%m-%d").to_string(),
        r.lat.to_string(),
        r.lon.to_string(),
        r.species.code().to_string(),
        r.sex.code().to_string(),
        r.length_ft.map(|l| l.to_string()).unwrap_or_default(),
        r.nation.clone(),
        r.expedition_type.code().to_string(),
        r.source_line.to_string(),
    ]
}

/// Streams records as canonical CSV. Returns the number of data rows.
pub fn write_canonical_csv<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a CatchRecord>,
) -> Result<u64, csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CANONICAL_HEADER)?;
    let mut n = 0;
    for r in records {
        w.write_record(record_fields(r))?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn write_artifact<W: Write>(mut out: W, catalog: &Catalog) -> Result<(), ArtifactError> {
    writeln!(out, "{ARTIFACT_MAGIC} {ARTIFACT_VERSION}")?;
    serde_json::to_writer(&mut out, catalog.ingest_report())?;
    writeln!(out)?;
    write_canonical_csv(&mut out, catalog.records())?;
    out.flush()?;
    Ok(())
}

pub fn read_artifact<R: Read>(input: R) -> Result<Catalog, ArtifactError> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let version = line.trim_end().strip_prefix(ARTIFACT_MAGIC).ok_or(ArtifactError::BadMagic)?.trim();
    if version != ARTIFACT_VERSION.to_string() {
        return Err(ArtifactError::Version(version.to_string()));
    }
    line.clear();
    reader.read_line(&mut line)?;
    let report: IngestReport = serde_json::from_str(line.trim_end())?;

    let (parsed, inner) = ingest_readers(vec![("artifact".to_string(), reader)], &ColumnMapping::canonical())?;
    if inner.rejected > 0 || parsed.len() as u64 != report.accepted {
        return Err(ArtifactError::Records(format!(
            "{} rows rejected, {} records read, report says {}",
            inner.rejected,
            parsed.len(),
            report.accepted
        )));
    }
    Ok(Catalog::new(parsed.records().to_vec(), report)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExpeditionType, Sex, Species};
    use chrono::NaiveDate;

    fn sample() -> Catalog {
        let mk = |id: u64, lat: f64, lon: f64, len: Option<f64>| CatchRecord {
            record_id: id,
            expedition_id: format!("E,{id}"),
            date: NaiveDate::from_ymd_opt(1960, 2, 29).unwrap(),
            lat,
            lon,
            species: Species::Sei,
            sex: Sex::Unknown,
            length_ft: len,
            nation: "JPN".into(),
            expedition_type: ExpeditionType::Pelagic,
            source_line: 40 + id,
        };
        Catalog::from_records(vec![
            mk(0, -61.123456789012345, 179.99999999, Some(49.2125984)),
            mk(1, 1e-7, -180.0, None),
            mk(2, 0.1 + 0.2, 33.333333333333336, Some(1.0 / 3.0)),
        ])
        .unwrap()
    }

    #[test]
    fn artifact_round_trip_is_lossless() {
        let cat = sample();
        let mut buf = Vec::new();
        write_artifact(&mut buf, &cat).unwrap();
        let back = read_artifact(buf.as_slice()).unwrap();
        assert_eq!(back, cat);
        let mut again = Vec::new();
        write_artifact(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn canonical_csv_reingests_identically() {
        let cat = sample();
        let mut buf = Vec::new();
        assert_eq!(write_canonical_csv(&mut buf, cat.records()).unwrap(), 3);
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("record_id,expedition_id,date,lat,lon,species,sex,length_ft,nation,expedition_type,source_line\n"));
        let (back, _) = ingest_readers(vec![("x".into(), buf.as_slice())], &ColumnMapping::canonical()).unwrap();
        assert_eq!(back.records(), cat.records());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(read_artifact("hello\n".as_bytes()), Err(ArtifactError::BadMagic)));
        assert!(matches!(read_artifact("catchmap-catalog 9\n{}\n".as_bytes()), Err(ArtifactError::Version(_))));
    }
}
