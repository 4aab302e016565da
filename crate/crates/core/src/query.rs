//! Filter expression grammar shared by the HTTP API and the CLI.
//!
//! A filter is a set of URL query parameters:
//!
//! | key          | value                                        |
//! |--------------|----------------------------------------------|
//! | `species`    | comma list of species codes                  |
//! | `sex`        | comma list of `female`/`male`/`unknown` (`f`/`m`/`u`) |
//! | `from`, `to` | ISO-8601 dates, inclusive                    |
//! | `bbox`       | `lat_min,lat_max,lon_min,lon_max`; `lon_min > lon_max` wraps the antimeridian |
//! | `nation`     | comma list of nation codes                   |
//! | `type`       | comma list of `land`/`pelagic`/`unknown`     |
//! | `lmin`, `lmax` | length bounds in feet, inclusive           |
//! | `expedition` | comma list of expedition ids                 |
//!
//! List keys may repeat (values accumulate); scalar keys may not. Unknown
//! keys are errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::model::{BBox, DateRange, ExpeditionType, FilterSpec, LengthRange, Sex, Species};

pub const FILTER_KEYS: [&str; 10] = ["species", "sex", "from", "to", "bbox", "nation", "type", "lmin", "lmax", "expedition"];

/// A request-level parameter error: which parameter, and why.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("parameter '{param}': {reason}")]
pub struct ParamError {
    pub param: String,
    pub reason: String,
}

impl ParamError {
    pub fn new(param: impl Into<String>, reason: impl fmt::Display) -> Self {
        Self { param: param.into(), reason: reason.to_string() }
    }
}

fn split_list<'a>(key: &str, value: &'a str) -> Result<Vec<&'a str>, ParamError> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(ParamError::new(key, "empty list element"));
    }
    Ok(items)
}

fn parse_codes<T: Ord + std::str::FromStr<Err = String>>(
    key: &str,
    value: &str,
    into: &mut Option<BTreeSet<T>>,
) -> Result<(), ParamError> {
    let set = into.get_or_insert_with(BTreeSet::new);
    for item in split_list(key, value)? {
        set.insert(item.parse::<T>().map_err(|e| ParamError::new(key, e))?);
    }
    Ok(())
}

fn parse_strings(key: &str, value: &str, into: &mut Option<BTreeSet<String>>) -> Result<(), ParamError> {
    let set = into.get_or_insert_with(BTreeSet::new);
    set.extend(split_list(key, value)?.into_iter().map(str::to_string));
    Ok(())
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, ParamError> {
    NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d").map_err(|e| ParamError::new(key, format!("'{value}' is not a YYYY-MM-DD date ({e})")))
}

fn parse_float(key: &str, value: &str) -> Result<f64, ParamError> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParamError::new(key, format!("'{value}' is not a number"))),
    }
}

fn set_once<T>(key: &str, slot: &mut Option<T>, value: T) -> Result<(), ParamError> {
    if slot.is_some() {
        return Err(ParamError::new(key, "given more than once"));
    }
    *slot = Some(value);
    Ok(())
}

fn parse_bbox(value: &str) -> Result<BBox, ParamError> {
    let nums = value.split(',').map(|v| parse_float("bbox", v)).collect::<Result<Vec<_>, _>>()?;
    let [lat_min, lat_max, lon_min, lon_max] = nums[..] else {
        return Err(ParamError::new("bbox", format!("expected 4 numbers lat_min,lat_max,lon_min,lon_max, got {}", nums.len())));
    };
    if !(-90.0..=90.0).contains(&lat_min) || !(-90.0..=90.0).contains(&lat_max) {
        return Err(ParamError::new("bbox", "latitudes must lie in [-90, 90]"));
    }
    if lat_min > lat_max {
        return Err(ParamError::new("bbox", "lat_min exceeds lat_max"));
    }
    if !(-180.0..=180.0).contains(&lon_min) || !(-180.0..=180.0).contains(&lon_max) {
        return Err(ParamError::new("bbox", "longitudes must lie in [-180, 180]"));
    }
    Ok(BBox::new(lat_min, lat_max, lon_min, lon_max))
}

/// Builds a [`FilterSpec`] from decoded `(key, value)` pairs.
pub fn parse_filter<K: AsRef<str>, V: AsRef<str>>(params: &[(K, V)]) -> Result<FilterSpec, ParamError> {
    let mut spec = FilterSpec::default();
    let (mut from, mut to, mut lmin, mut lmax) = (None, None, None, None);
    for (k, v) in params {
        let (key, value) = (k.as_ref(), v.as_ref());
        match key {
            "species" => parse_codes::<Species>(key, value, &mut spec.species)?,
            "sex" => parse_codes::<Sex>(key, value, &mut spec.sex)?,
            "type" => parse_codes::<ExpeditionType>(key, value, &mut spec.expedition_types)?,
            "nation" => parse_strings(key, value, &mut spec.nations)?,
            "expedition" => parse_strings(key, value, &mut spec.expedition_ids)?,
            "from" => set_once(key, &mut from, parse_date(key, value)?)?,
            "to" => set_once(key, &mut to, parse_date(key, value)?)?,
            "lmin" => set_once(key, &mut lmin, parse_float(key, value)?)?,
            "lmax" => set_once(key, &mut lmax, parse_float(key, value)?)?,
            "bbox" => {
                let b = parse_bbox(value)?;
                set_once(key, &mut spec.bbox, b)?
            }
            other => return Err(ParamError::new(other, "unknown parameter")),
        }
    }
    if from.is_some() || to.is_some() {
        let range = DateRange::new(from, to);
        if !range.is_ordered() {
            return Err(ParamError::new("from", "'from' is after 'to'"));
        }
        spec.date_range = Some(range);
    }
    if lmin.is_some() || lmax.is_some() {
        if let (Some(a), Some(b)) = (lmin, lmax) {
            if a > b {
                return Err(ParamError::new("lmin", "'lmin' exceeds 'lmax'"));
            }
        }
        spec.length_range_ft = Some(LengthRange { min: lmin, max: lmax });
    }
    Ok(spec)
}

/// Parses an `a=b&c=d` string (percent-decoding applied).
pub fn parse_filter_str(query: &str) -> Result<FilterSpec, ParamError> {
    let pairs: Vec<(String, String)> = url::form_urlencoded::parse(query.trim_start_matches('?').as_bytes())
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    parse_filter(&pairs)
}

/// Decoded query pairs split into a filter and the endpoint's own scalar
/// options. Option keys may appear once; anything else must be a filter key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RequestParams {
    pub filter: FilterSpec,
    pub options: BTreeMap<String, String>,
}

impl RequestParams {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }

    /// Parses option `key`, falling back to `default` when absent.
    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ParamError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.trim().parse().map_err(|e| ParamError::new(key, format!("'{raw}': {e}"))),
        }
    }
}

pub fn split_params(query: &str, option_keys: &[&str]) -> Result<RequestParams, ParamError> {
    let mut filter_pairs = Vec::new();
    let mut options = BTreeMap::new();
    for (k, v) in url::form_urlencoded::parse(query.trim_start_matches('?').as_bytes()) {
        if option_keys.contains(&k.as_ref()) {
            if options.insert(k.to_string(), v.into_owned()).is_some() {
                return Err(ParamError::new(k, "given more than once"));
            }
        } else {
            filter_pairs.push((k.into_owned(), v.into_owned()));
        }
    }
    Ok(RequestParams { filter: parse_filter(&filter_pairs)?, options })
}

fn join<T>(set: &BTreeSet<T>, f: impl Fn(&T) -> String) -> String {
    set.iter().map(f).collect::<Vec<_>>().join(",")
}

/// Inverse of [`parse_filter`] for filters that satisfy its invariants.
pub fn render_filter(spec: &FilterSpec) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut push = |k: &str, v: String| out.push((k.to_string(), v));
    if let Some(s) = &spec.species {
        push("species", join(s, |x| x.code().to_string()));
    }
    if let Some(s) = &spec.sex {
        push("sex", join(s, |x| x.code().to_string()));
    }
    if let Some(r) = &spec.date_range {
        if let Some(d) = r.start {
            push("from", d.format("%Y-%m-%d").to_string());
        }
        if let Some(d) = r.end {
            push("to", d.format("%Y-%m-%d").to_string());
        }
    }
    if let Some(b) = &spec.bbox {
        push("bbox", format!("{},{},{},{}", b.lat_min, b.lat_max, b.lon_min, b.lon_max));
    }
    if let Some(s) = &spec.nations {
        push("nation", join(s, String::clone));
    }
    if let Some(s) = &spec.expedition_types {
        push("type", join(s, |x| x.code().to_string()));
    }
    if let Some(r) = &spec.length_range_ft {
        if let Some(v) = r.min {
            push("lmin", v.to_string());
        }
        if let Some(v) = r.max {
            push("lmax", v.to_string());
        }
    }
    if let Some(s) = &spec.expedition_ids {
        push("expedition", join(s, String::clone));
    }
    out
}

pub fn render_filter_str(spec: &FilterSpec) -> String {
    url::form_urlencoded::Serializer::new(String::new()).extend_pairs(render_filter(spec)).finish()
}
