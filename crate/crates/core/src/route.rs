//! Expedition route reconstruction.
//!
//! Each expedition's catches, ordered by `(date, record_id)`, collapse into
//! stops wherever consecutive positions coincide; every change of position
//! between consecutive stops is one directed [`RouteEdge`]. No port legs are
//! synthesised. Stops are per expedition: two expeditions visiting the same
//! position give two nodes.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};

use crate::geo::{great_circle_km, Arc};
use crate::model::{Catalog, CatchRecord, ExpeditionType, FilterSpec};
use crate::par::{self, Exec};

/// Positions closer than this (per axis, degrees) are the same location.
pub const DEFAULT_COINCIDENCE_EPS_DEG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteOptions {
    pub coincidence_epsilon_deg: f64,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self { coincidence_epsilon_deg: DEFAULT_COINCIDENCE_EPS_DEG }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackStop {
    pub lat: f64,
    pub lon: f64,
    pub date_first: NaiveDate,
    pub date_last: NaiveDate,
    pub catch_record_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpeditionTrack {
    pub expedition_id: String,
    /// Taken from the track's first record.
    pub nation: String,
    pub expedition_type: ExpeditionType,
    pub stops: Vec<TrackStop>,
}

/// Movement between two consecutive stops of one expedition.
///
/// `from_stop`/`to_stop` index the track's stops when produced by
/// [`extract_routes`], and the graph's nodes inside a [`CatchGraph`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteEdge {
    pub expedition_id: String,
    pub from_stop: usize,
    pub to_stop: usize,
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub depart_date: NaiveDate,
    pub arrive_date: NaiveDate,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSummary {
    pub expedition_id: String,
    pub nation: String,
    pub expedition_type: ExpeditionType,
    pub first_node: usize,
    pub stop_count: usize,
    pub first_edge: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CatchGraph {
    pub nodes: Vec<TrackStop>,
    pub edges: Vec<RouteEdge>,
    pub tracks: Vec<TrackSummary>,
}

impl CatchGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges with their owning track, in canonical order.
    pub fn edges_by_track(&self) -> impl Iterator<Item = (&TrackSummary, &RouteEdge)> {
        self.tracks.iter().flat_map(move |t| {
            self.edges[t.first_edge..t.first_edge + t.stop_count.saturating_sub(1)].iter().map(move |e| (t, e))
        })
    }
}

fn same_position(a: (f64, f64), b: (f64, f64), eps: f64) -> bool {
    let dlat = (a.0 - b.0).abs();
    let mut dlon = (a.1 - b.1).abs();
    if dlon > 180.0 {
        dlon = 360.0 - dlon;
    }
    dlat < eps && dlon < eps
}

/// Collapses one expedition's records (already sorted) into stops.
fn track_from_sorted(records: &[&CatchRecord], eps: f64) -> ExpeditionTrack {
    let first = records[0];
    let mut stops: Vec<TrackStop> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for r in records {
        let pos = (r.lat, r.lon);
        match (stops.last_mut(), prev) {
            (Some(stop), Some(p)) if same_position(p, pos, eps) => {
                stop.date_last = r.date;
                stop.catch_record_ids.push(r.record_id);
            }
            _ => stops.push(TrackStop {
                lat: r.lat,
                lon: r.lon,
                date_first: r.date,
                date_last: r.date,
                catch_record_ids: vec![r.record_id],
            }),
        }
        prev = Some(pos);
    }
    ExpeditionTrack {
        expedition_id: first.expedition_id.clone(),
        nation: first.nation.clone(),
        expedition_type: first.expedition_type,
        stops,
    }
}

pub fn build_expedition_tracks(catalog: &Catalog, filter: &FilterSpec) -> Vec<ExpeditionTrack> {
    build_expedition_tracks_with(catalog, filter, &RouteOptions::default())
}

/// Tracks ordered by expedition id, stops by `(date, record_id)`.
pub fn build_expedition_tracks_with(catalog: &Catalog, filter: &FilterSpec, opts: &RouteOptions) -> Vec<ExpeditionTrack> {
    let mut groups: BTreeMap<&str, Vec<&CatchRecord>> = BTreeMap::new();
    for r in catalog.filtered(filter) {
        groups.entry(r.expedition_id.as_str()).or_default().push(r);
    }
    let groups: Vec<Vec<&CatchRecord>> = groups.into_values().collect();
    let eps = opts.coincidence_epsilon_deg;
    par::map(Exec::default(), &groups, |g| {
        let mut g = g.clone();
        g.sort_by_key(|r| (r.date, r.record_id));
        track_from_sorted(&g, eps)
    })
}

pub fn extract_routes(track: &ExpeditionTrack) -> Vec<RouteEdge> {
    track
        .stops
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let (a, b) = (&pair[0], &pair[1]);
            RouteEdge {
                expedition_id: track.expedition_id.clone(),
                from_stop: k,
                to_stop: k + 1,
                from: (a.lat, a.lon),
                to: (b.lat, b.lon),
                depart_date: a.date_last,
                arrive_date: b.date_first,
                length_km: great_circle_km((a.lat, a.lon), (b.lat, b.lon)),
            }
        })
        .collect()
}

pub fn build_graph(catalog: &Catalog, filter: &FilterSpec) -> CatchGraph {
    build_graph_with(catalog, filter, &RouteOptions::default())
}

pub fn build_graph_with(catalog: &Catalog, filter: &FilterSpec, opts: &RouteOptions) -> CatchGraph {
    graph_from_tracks(build_expedition_tracks_with(catalog, filter, opts))
}

pub fn graph_from_tracks(tracks: Vec<ExpeditionTrack>) -> CatchGraph {
    let per_track = par::map(Exec::default(), &tracks, extract_routes);
    let mut graph = CatchGraph::default();
    for (track, edges) in tracks.into_iter().zip(per_track) {
        let offset = graph.nodes.len();
        graph.tracks.push(TrackSummary {
            expedition_id: track.expedition_id,
            nation: track.nation,
            expedition_type: track.expedition_type,
            first_node: offset,
            stop_count: track.stops.len(),
            first_edge: graph.edges.len(),
        });
        graph.edges.extend(edges.into_iter().map(|mut e| {
            e.from_stop += offset;
            e.to_stop += offset;
            e
        }));
        graph.nodes.extend(track.stops);
    }
    graph
}

/// Points along the shorter great-circle arc, at most `max_step_deg` apart.
pub fn arc_polyline(from: (f64, f64), to: (f64, f64), max_step_deg: f64) -> Vec<(f64, f64)> {
    let arc = Arc::new(from, to);
    let n = ((arc.angle.to_degrees() / max_step_deg).ceil() as usize).max(1);
    let mut pts: Vec<(f64, f64)> = (0..=n).map(|k| arc.lat_lon(arc.angle * k as f64 / n as f64)).collect();
    pts[0] = from;
    pts[n] = to;
    pts
}

/// Splits a `(lat, lon)` polyline into GeoJSON `[lon, lat]` parts at the
/// antimeridian.
pub fn split_at_antimeridian(pts: &[(f64, f64)]) -> Vec<Vec<[f64; 2]>> {
    let mut parts: Vec<Vec<[f64; 2]>> = vec![];
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for (k, &(lat, lon)) in pts.iter().enumerate() {
        if k > 0 {
            let (plat, plon) = pts[k - 1];
            if (lon - plon).abs() > 180.0 {
                let (edge, unwrapped) = if plon > 0.0 { (180.0, lon + 360.0) } else { (-180.0, lon - 360.0) };
                let t = (edge - plon) / (unwrapped - plon);
                let cross_lat = plat + t * (lat - plat);
                cur.push([edge, cross_lat]);
                parts.push(std::mem::take(&mut cur));
                cur.push([-edge, cross_lat]);
            }
        }
        cur.push([lon, lat]);
    }
    parts.push(cur);
    parts.retain(|p| p.windows(2).any(|w| w[0] != w[1]));
    parts
}

fn line_geometry(parts: Vec<Vec<[f64; 2]>>) -> Value {
    if parts.len() == 1 {
        json!({"type": "LineString", "coordinates": parts[0]})
    } else {
        json!({"type": "MultiLineString", "coordinates": parts})
    }
}

pub fn edge_feature(edge: &RouteEdge) -> Value {
    let parts = split_at_antimeridian(&arc_polyline(edge.from, edge.to, 1.0));
    json!({
        "type": "Feature",
        "geometry": line_geometry(parts),
        "properties": {
            "expedition_id": edge.expedition_id,
            "from_node": edge.from_stop,
            "to_node": edge.to_stop,
            "depart_date": edge.depart_date.to_string(),
            "arrive_date": edge.arrive_date.to_string(),
            "length_km": edge.length_km,
        }
    })
}

pub fn node_feature(id: usize, expedition_id: &str, stop: &TrackStop) -> Value {
    json!({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [stop.lon, stop.lat]},
        "properties": {
            "node": id,
            "expedition_id": expedition_id,
            "date_first": stop.date_first.to_string(),
            "date_last": stop.date_last.to_string(),
            "catches": stop.catch_record_ids.len(),
        }
    })
}

/// GeoJSON FeatureCollection of the graph: nodes as Points (optional) and
/// edges as LineStrings, split into MultiLineStrings at the antimeridian.
pub fn graph_to_geojson(graph: &CatchGraph, include_nodes: bool) -> Value {
    let mut features = Vec::with_capacity(graph.edges.len() + if include_nodes { graph.nodes.len() } else { 0 });
    if include_nodes {
        for t in &graph.tracks {
            for id in t.first_node..t.first_node + t.stop_count {
                features.push(node_feature(id, &t.expedition_id, &graph.nodes[id]));
            }
        }
    }
    features.extend(par::map(Exec::default(), &graph.edges, edge_feature));
    json!({"type": "FeatureCollection", "features": features})
}
