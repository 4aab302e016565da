//! Random corpora and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the code under test except to
//! construct inputs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use catchmap_core::model::{BBox, CatchRecord, DateRange, ExpeditionType, FilterSpec, LengthRange, Sex, Species};
use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const NATIONS: [&str; 6] = ["NOR", "GBR", "JPN", "USSR", "NLD", "ZAF"];
const R_KM: f64 = 6371.0;

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

/// Coordinates snap to a coarse lattice now and then so that inclusive
/// bounds and cell edges actually get hit.
fn coord(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = rng.random_range(lo..hi);
    match rng.random_range(0..4) {
        0 => v.round(),
        1 => (v * 100.0).round() / 100.0,
        _ => v,
    }
    .clamp(lo, hi)
}

pub fn random_record(rng: &mut ChaCha8Rng, id: u64) -> CatchRecord {
    let mut lon = coord(rng, -180.0, 180.0);
    if lon >= 180.0 {
        lon = -180.0;
    }
    CatchRecord {
        record_id: id,
        expedition_id: format!("E{:03}", rng.random_range(0..300)),
        date: day(1900, 1, 1) + Duration::days(rng.random_range(0..(86 * 365))),
        lat: coord(rng, -90.0, 90.0),
        lon,
        species: pick(rng, &Species::ALL),
        sex: pick(rng, &Sex::ALL),
        length_ft: rng.random_bool(0.85).then(|| (rng.random_range(5.0..110.0f64) * 10.0).round() / 10.0),
        nation: pick(rng, &NATIONS).to_string(),
        expedition_type: pick(rng, &ExpeditionType::ALL),
        source_line: id + 2,
    }
}

pub fn random_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<CatchRecord> {
    (0..n as u64).map(|id| random_record(rng, id)).collect()
}

fn subset<T: Copy + Ord>(rng: &mut ChaCha8Rng, all: &[T]) -> BTreeSet<T> {
    let mut s: BTreeSet<T> = all.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
    if s.is_empty() {
        s.insert(pick(rng, all));
    }
    s
}

pub fn random_bbox(rng: &mut ChaCha8Rng) -> BBox {
    let a = coord(rng, -90.0, 90.0);
    let b = coord(rng, -90.0, 90.0);
    let lon_min = coord(rng, -180.0, 180.0);
    let lon_max = coord(rng, -180.0, 180.0);
    // roughly half the boxes with lon_min > lon_max wrap the antimeridian
    BBox::new(a.min(b), a.max(b), lon_min, lon_max)
}

pub fn random_filter(rng: &mut ChaCha8Rng) -> FilterSpec {
    let mut f = FilterSpec::default();
    if rng.random_bool(0.35) {
        f.species = Some(subset(rng, &Species::ALL));
    }
    if rng.random_bool(0.25) {
        f.sex = Some(subset(rng, &Sex::ALL));
    }
    if rng.random_bool(0.4) {
        let a = day(1900, 1, 1) + Duration::days(rng.random_range(0..(86 * 365)));
        let b = a + Duration::days(rng.random_range(0..(30 * 365)));
        f.date_range = Some(match rng.random_range(0..3) {
            0 => DateRange::new(Some(a), None),
            1 => DateRange::new(None, Some(b)),
            _ => DateRange::between(a, b),
        });
    }
    if rng.random_bool(0.35) {
        f.bbox = Some(random_bbox(rng));
    }
    if rng.random_bool(0.25) {
        f.nations = Some(subset(rng, &NATIONS).into_iter().map(String::from).collect());
    }
    if rng.random_bool(0.25) {
        f.expedition_types = Some(subset(rng, &ExpeditionType::ALL));
    }
    if rng.random_bool(0.25) {
        let lo = (rng.random_range(0.0..100.0f64)).round();
        let hi = lo + rng.random_range(0.0..60.0f64).round();
        f.length_range_ft = Some(match rng.random_range(0..3) {
            0 => LengthRange { min: Some(lo), max: None },
            1 => LengthRange { min: None, max: Some(hi) },
            _ => LengthRange { min: Some(lo), max: Some(hi) },
        });
    }
    if rng.random_bool(0.1) {
        f.expedition_ids = Some((0..rng.random_range(1..20)).map(|_| format!("E{:03}", rng.random_range(0..300))).collect());
    }
    f
}

/// Accept-set built one predicate at a time, each as its own linear scan,
/// then intersected.
pub fn oracle_accept_set(records: &[CatchRecord], f: &FilterSpec) -> BTreeSet<u64> {
    let mut sets: Vec<BTreeSet<u64>> = Vec::new();
    let scan = |pred: &dyn Fn(&CatchRecord) -> bool| records.iter().filter(|r| pred(r)).map(|r| r.record_id).collect::<BTreeSet<u64>>();
    sets.push(scan(&|_| true));
    if let Some(s) = &f.species {
        sets.push(scan(&|r| s.iter().any(|x| *x == r.species)));
    }
    if let Some(s) = &f.sex {
        sets.push(scan(&|r| s.iter().any(|x| *x == r.sex)));
    }
    if let Some(d) = &f.date_range {
        sets.push(scan(&|r| d.start.map_or(true, |s| r.date >= s)));
        sets.push(scan(&|r| d.end.map_or(true, |e| r.date <= e)));
    }
    if let Some(b) = &f.bbox {
        sets.push(scan(&|r| b.lat_min <= r.lat && r.lat <= b.lat_max));
        sets.push(scan(&|r| {
            if b.lon_min <= b.lon_max {
                b.lon_min <= r.lon && r.lon <= b.lon_max
            } else {
                !(b.lon_max < r.lon && r.lon < b.lon_min)
            }
        }));
    }
    if let Some(s) = &f.nations {
        sets.push(scan(&|r| s.iter().any(|x| *x == r.nation)));
    }
    if let Some(s) = &f.expedition_types {
        sets.push(scan(&|r| s.iter().any(|x| *x == r.expedition_type)));
    }
    if let Some(l) = &f.length_range_ft {
        sets.push(scan(&|r| match r.length_ft {
            None => false,
            Some(v) => l.min.map_or(true, |m| v >= m) && l.max.map_or(true, |m| v <= m),
        }));
    }
    if let Some(s) = &f.expedition_ids {
        sets.push(scan(&|r| s.iter().any(|x| *x == r.expedition_id)));
    }
    sets.into_iter().reduce(|a, b| a.intersection(&b).copied().collect()).unwrap()
}

pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R_KM * h.sqrt().min(1.0).asin()
}

/// (expedition, from, to, depart, arrive, length)
pub type OracleEdge = (String, (f64, f64), (f64, f64), NaiveDate, NaiveDate, f64);

/// Scan-and-compare route extraction: for each expedition, collect its
/// records by a full scan, order them by (date, record id) and emit an edge
/// whenever the position differs from the previous record's.
pub fn oracle_routes(records: &[CatchRecord]) -> Vec<OracleEdge> {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.expedition_id.as_str()).collect();
    let mut out = Vec::new();
    for id in ids {
        let mut mine: Vec<&CatchRecord> = records.iter().filter(|r| r.expedition_id == id).collect();
        mine.sort_by(|a, b| (a.date, a.record_id).cmp(&(b.date, b.record_id)));
        let mut prev = mine[0];
        for r in &mine[1..] {
            if (r.lat, r.lon) != (prev.lat, prev.lon) {
                let from = (prev.lat, prev.lon);
                let to = (r.lat, r.lon);
                out.push((id.to_string(), from, to, prev.date, r.date, haversine_km(from, to)));
            }
            prev = r;
        }
    }
    out
}

fn unit(lat: f64, lon: f64) -> [f64; 3] {
    let (p, l) = (lat.to_radians(), lon.to_radians());
    [p.cos() * l.cos(), p.cos() * l.sin(), p.sin()]
}

/// Spreads `length_km` over cells by sampling the great circle at `samples`
/// equally spaced points (spherical linear interpolation).
pub fn oracle_raster(from: (f64, f64), to: (f64, f64), length_km: f64, bin_deg: u32, samples: usize) -> BTreeMap<(u32, u32), f64> {
    let (a, b) = (unit(from.0, from.1), unit(to.0, to.1));
    let cos_w = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    let w = cos_w.acos();
    let d = bin_deg as f64;
    let (rows, cols) = ((180 / bin_deg) as i64, (360 / bin_deg) as i64);
    let mut cells = BTreeMap::new();
    for k in 0..samples {
        let t = (k as f64 + 0.5) / samples as f64;
        let p = if w < 1e-12 {
            a
        } else {
            let (s0, s1) = (((1.0 - t) * w).sin() / w.sin(), (t * w).sin() / w.sin());
            [s0 * a[0] + s1 * b[0], s0 * a[1] + s1 * b[1], s0 * a[2] + s1 * b[2]]
        };
        let lat = p[2].clamp(-1.0, 1.0).asin().to_degrees();
        let lon = p[1].atan2(p[0]).to_degrees();
        let i = (((lat + 90.0) / d).floor() as i64).clamp(0, rows - 1) as u32;
        let j = (((lon + 180.0) / d).floor() as i64).rem_euclid(cols) as u32;
        *cells.entry((i, j)).or_insert(0.0) += length_km / samples as f64;
    }
    cells
}

/// Dense `n × n` step operator `(1 − α)I + α·Pᵀ` for undirected weighted
/// edges `(a, b, affinity)`.
pub fn dense_operator(n: usize, edges: &[(usize, usize, f64)], alpha: f64) -> Vec<Vec<f64>> {
    let mut adj = vec![vec![0.0; n]; n];
    for &(a, b, w) in edges {
        adj[a][b] += w;
        adj[b][a] += w;
    }
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let deg: f64 = adj[i].iter().sum();
        for j in 0..n {
            // column i of Pᵀ is row i of P
            let p_ij = if deg > 0.0 { adj[i][j] / deg } else if i == j { 1.0 } else { 0.0 };
            m[j][i] += alpha * p_ij;
        }
        m[i][i] += 1.0 - alpha;
    }
    m
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

/// `m^k` by repeated squaring.
pub fn mat_pow(m: &[Vec<f64>], mut k: u32) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut base = m.to_vec();
    while k > 0 {
        if k & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        k >>= 1;
    }
    result
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}
