//! Search effort: route length per grid cell, catch-per-unit-effort surfaces
//! and diffusion of node mass over the route graph.
//!
//! Effort is measured in kilometres of reconstructed route. Only
//! expedition-level predicates (nation, expedition type, expedition ids),
//! the date range and the bbox select edges; species, sex and length
//! predicates describe catches, not searching, and are ignored here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::geo::Arc;
use crate::grid::{bin_index, cells_geojson, AggError, BinSize, CellIndex, SpatialBinGrid};
use crate::model::{DateRange, FilterSpec};
use crate::par::{self, Exec};
use crate::route::{CatchGraph, RouteEdge};

/// Cells with less effort than this have no defined CPUE.
pub const DEFAULT_MIN_EFFORT_KM: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum EffortError {
    #[error(transparent)]
    Grid(#[from] AggError),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("min_effort_km must be a non-negative number, got {0}")]
    MinEffort(f64),
    #[error("expected {expected} node weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("node weights must be finite and non-negative (node {0})")]
    NegativeWeight(usize),
}

/// Splits the shorter great-circle arc of `edge` into per-cell lengths.
///
/// Cut points are the exact parameters where the arc crosses a grid
/// meridian or parallel, so each piece lies in a single cell. The pieces sum
/// to `edge.length_km`. Output is sorted by cell.
pub fn rasterize_edge(edge: &RouteEdge, bin: BinSize) -> Vec<(CellIndex, f64)> {
    rasterize_arc(edge.from, edge.to, edge.length_km, bin)
}

pub fn rasterize_arc(from: (f64, f64), to: (f64, f64), length_km: f64, bin: BinSize) -> Vec<(CellIndex, f64)> {
    let arc = Arc::new(from, to);
    let omega = arc.angle;
    if omega <= 0.0 || length_km <= 0.0 {
        return vec![(bin_index(from.0, from.1, bin), length_km.max(0.0))];
    }
    let d = bin.degrees() as f64;
    let mut cuts = vec![0.0, omega];
    let mut push = |sol: [Option<f64>; 2]| {
        for t in sol.into_iter().flatten() {
            if t > 0.0 && t < omega {
                cuts.push(t);
            }
        }
    };
    // each plane holds meridians λ and λ + 180°
    for k in 0..(180 / bin.degrees()) {
        let lam = (k as f64 * d - 180.0).to_radians();
        push(arc.level_crossings([-lam.sin(), lam.cos(), 0.0], 0.0));
    }
    for k in 1..bin.rows() {
        let lat = (k as f64 * d - 90.0).to_radians();
        push(arc.level_crossings([0.0, 0.0, 1.0], lat.sin()));
    }
    cuts.sort_by(f64::total_cmp);

    let mut cells: BTreeMap<CellIndex, f64> = BTreeMap::new();
    for w in cuts.windows(2) {
        let span = w[1] - w[0];
        if span <= 0.0 {
            continue;
        }
        let (lat, lon) = arc.lat_lon(0.5 * (w[0] + w[1]));
        *cells.entry(bin_index(lat, lon, bin)).or_default() += span / omega * length_km;
    }
    cells.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortCell {
    pub i: u32,
    pub j: u32,
    pub effort_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortRaster {
    pub bin_deg: BinSize,
    pub edge_count: u64,
    /// Σ length of the selected edges.
    pub edge_length_km: f64,
    /// Σ cell effort; equals `edge_length_km` up to rounding.
    pub total_km: f64,
    pub cells: Vec<EffortCell>,
}

impl EffortRaster {
    pub fn get(&self, idx: CellIndex) -> Option<f64> {
        self.cells.binary_search_by_key(&idx, |c| (c.i, c.j)).ok().map(|k| self.cells[k].effort_km)
    }

    pub fn to_geojson(&self) -> serde_json::Value {
        cells_geojson(self.bin_deg, self.cells.iter().map(|c| (c.i, c.j, json!({"i": c.i, "j": c.j, "effort_km": c.effort_km}))))
    }
}

fn edge_selected(filter: &FilterSpec, date_range: Option<&DateRange>, track_ok: bool, e: &RouteEdge) -> bool {
    track_ok
        && filter.date_range.is_none_or(|r| r.intersects(e.depart_date, e.arrive_date))
        && date_range.is_none_or(|r| r.intersects(e.depart_date, e.arrive_date))
        && filter.bbox.is_none_or(|b| b.contains(e.from.0, e.from.1) || b.contains(e.to.0, e.to.1))
}

/// Sums rasterised lengths of every selected edge. An edge whose
/// `[depart, arrive]` interval touches the date range contributes its whole
/// length.
pub fn effort_raster(graph: &CatchGraph, filter: &FilterSpec, bin: BinSize, date_range: Option<&DateRange>) -> EffortRaster {
    effort_raster_with(Exec::default(), graph, filter, bin, date_range)
}

pub fn effort_raster_with(
    exec: Exec,
    graph: &CatchGraph,
    filter: &FilterSpec,
    bin: BinSize,
    date_range: Option<&DateRange>,
) -> EffortRaster {
    let selected: Vec<&RouteEdge> = graph
        .tracks
        .iter()
        .flat_map(|t| {
            let ok = filter.matches_expedition(&t.expedition_id, &t.nation, t.expedition_type);
            graph.edges[t.first_edge..t.first_edge + t.stop_count.saturating_sub(1)]
                .iter()
                .filter(move |e| edge_selected(filter, date_range, ok, e))
        })
        .collect();
    let pieces = par::map(exec, &selected, |e| rasterize_edge(e, bin));
    // fixed (edge, cell) order keeps the floating-point sums reproducible
    let mut cells: BTreeMap<CellIndex, f64> = BTreeMap::new();
    for list in pieces {
        for (idx, km) in list {
            *cells.entry(idx).or_default() += km;
        }
    }
    let cells: Vec<EffortCell> = cells.into_iter().map(|((i, j), effort_km)| EffortCell { i, j, effort_km }).collect();
    EffortRaster {
        bin_deg: bin,
        edge_count: selected.len() as u64,
        edge_length_km: selected.iter().map(|e| e.length_km).sum(),
        total_km: cells.iter().map(|c| c.effort_km).sum(),
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpueCell {
    pub i: u32,
    pub j: u32,
    pub catches: u64,
    pub effort_km: f64,
    /// Catches per 1000 km; present iff `defined`.
    pub cpue: Option<f64>,
    pub defined: bool,
    /// Catches recorded where effort is below the threshold.
    pub catch_without_effort: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpueGrid {
    pub bin_deg: BinSize,
    pub min_effort_km: f64,
    pub cells: Vec<CpueCell>,
}

impl CpueGrid {
    /// Catches per 1000 km pooled over all defined cells.
    pub fn pooled_cpue(&self) -> Option<f64> {
        let (c, e) = self
            .cells
            .iter()
            .filter(|c| c.defined)
            .fold((0u64, 0.0), |(c, e), cell| (c + cell.catches, e + cell.effort_km));
        (e > 0.0).then(|| c as f64 / (e / 1000.0))
    }

    pub fn get(&self, idx: CellIndex) -> Option<&CpueCell> {
        self.cells.binary_search_by_key(&idx, |c| (c.i, c.j)).ok().map(|k| &self.cells[k])
    }

    pub fn to_geojson(&self) -> serde_json::Value {
        cells_geojson(
            self.bin_deg,
            self.cells.iter().map(|c| (c.i, c.j, serde_json::to_value(c).expect("serialisable"))),
        )
    }
}

pub fn cpue_grid(catches: &SpatialBinGrid, effort: &EffortRaster, min_effort_km: f64) -> Result<CpueGrid, EffortError> {
    if catches.bin_deg != effort.bin_deg {
        return Err(AggError::BinMismatch(catches.bin_deg.degrees(), effort.bin_deg.degrees()).into());
    }
    if !(min_effort_km.is_finite() && min_effort_km >= 0.0) {
        return Err(EffortError::MinEffort(min_effort_km));
    }
    let mut cells: BTreeMap<CellIndex, (u64, f64)> = BTreeMap::new();
    for c in &catches.cells {
        cells.entry((c.i, c.j)).or_default().0 = c.agg.count;
    }
    for c in &effort.cells {
        cells.entry((c.i, c.j)).or_default().1 = c.effort_km;
    }
    let cells = cells
        .into_iter()
        .map(|((i, j), (catches, effort_km))| {
            let defined = effort_km >= min_effort_km && effort_km > 0.0;
            CpueCell {
                i,
                j,
                catches,
                effort_km,
                cpue: defined.then(|| catches as f64 / (effort_km / 1000.0)),
                defined,
                catch_without_effort: catches > 0 && !defined,
            }
        })
        .collect();
    Ok(CpueGrid { bin_deg: catches.bin_deg, min_effort_km, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    alpha: f64,
    iterations: u32,
}

impl DiffusionParams {
    pub fn new(alpha: f64, iterations: u32) -> Result<Self, EffortError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha, iterations })
        } else {
            Err(EffortError::Alpha(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }
}

/// Undirected neighbour lists with edge affinity `1 / length_km`.
pub fn affinity_lists(graph: &CatchGraph) -> Vec<Vec<(usize, f64)>> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); graph.node_count()];
    for e in &graph.edges {
        let a = 1.0 / e.length_km;
        adj[e.from_stop].push((e.to_stop, a));
        adj[e.to_stop].push((e.from_stop, a));
    }
    adj
}

/// Iterates `w ← (1 − α)·w + α·Pᵀw`, where `P` is the row-stochastic
/// transition matrix over undirected neighbours weighted by affinity. Each
/// node pushes the α share of its mass to its neighbours, so total mass is
/// conserved; isolated nodes keep theirs.
pub fn diffuse_effort(graph: &CatchGraph, weights: &[f64], params: DiffusionParams) -> Result<Vec<f64>, EffortError> {
    let n = graph.node_count();
    if weights.len() != n {
        return Err(EffortError::WeightCount { expected: n, got: weights.len() });
    }
    if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(EffortError::NegativeWeight(k));
    }
    let adj = affinity_lists(graph);
    let degree: Vec<f64> = adj.iter().map(|l| l.iter().map(|(_, a)| a).sum()).collect();
    let nodes: Vec<usize> = (0..n).collect();
    let alpha = params.alpha;
    let mut w = weights.to_vec();
    for _ in 0..params.iterations {
        let next = par::map(Exec::default(), &nodes, |&j| {
            let inflow: f64 = if adj[j].is_empty() {
                w[j]
            } else {
                adj[j].iter().map(|&(i, a)| w[i] * a / degree[i]).sum()
            };
            (1.0 - alpha) * w[j] + alpha * inflow
        });
        w = next;
    }
    Ok(w)
}

/// Catch count per graph node, a natural starting mass for diffusion.
pub fn node_catch_counts(graph: &CatchGraph) -> Vec<f64> {
    graph.nodes.iter().map(|s| s.catch_record_ids.len() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{great_circle_km, EARTH_RADIUS_KM};
    use crate::model::{Catalog, CatchRecord, ExpeditionType, Sex, Species};
    use crate::route::build_graph;
    use chrono::NaiveDate;

    fn bin(d: u32) -> BinSize {
        BinSize::new(d).unwrap()
    }

    fn edge(from: (f64, f64), to: (f64, f64)) -> RouteEdge {
        let day = NaiveDate::from_ymd_opt(1950, 1, 1).unwrap();
        RouteEdge {
            expedition_id: "E".into(),
            from_stop: 0,
            to_stop: 1,
            from,
            to,
            depart_date: day,
            arrive_date: day,
            length_km: great_circle_km(from, to),
        }
    }

    #[test]
    fn edge_inside_one_cell() {
        let e = edge((10.2, 20.2), (10.7, 20.9));
        let cells = rasterize_edge(&e, bin(1));
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].0, (100, 200));
        assert!((cells[0].1 - e.length_km).abs() < 1e-9);
    }

    #[test]
    fn dateline_edge_splits_across_antimeridian() {
        let e = edge((0.0, -179.5), (0.0, 179.5));
        let cells = rasterize_edge(&e, bin(1));
        let one_degree = std::f64::consts::PI * EARTH_RADIUS_KM / 180.0;
        assert!((one_degree - 111.19).abs() < 0.01);
        assert_eq!(cells.iter().map(|c| c.0).collect::<Vec<_>>(), vec![(90, 0), (90, 359)]);
        let total: f64 = cells.iter().map(|c| c.1).sum();
        assert!((total - one_degree).abs() < 1e-6);
        assert!((cells[0].1 - one_degree / 2.0).abs() < 1e-6);
    }

    fn rec(id: u64, exp: &str, day: u32, lat: f64, lon: f64) -> CatchRecord {
        CatchRecord {
            record_id: id,
            expedition_id: exp.into(),
            date: NaiveDate::from_ymd_opt(1950, 1, day).unwrap(),
            lat,
            lon,
            species: Species::Blue,
            sex: Sex::Female,
            length_ft: None,
            nation: if exp == "A" { "NOR".into() } else { "JPN".into() },
            expedition_type: ExpeditionType::Pelagic,
            source_line: 0,
        }
    }

    #[test]
    fn raster_of_one_edge_equals_rasterize_edge() {
        let cat = Catalog::from_records(vec![rec(0, "A", 1, -60.0, 10.0), rec(1, "A", 3, -62.0, 14.0)]).unwrap();
        let g = build_graph(&cat, &FilterSpec::default());
        let r = effort_raster(&g, &FilterSpec::default(), bin(1), None);
        let direct = rasterize_edge(&g.edges[0], bin(1));
        assert_eq!(r.cells.iter().map(|c| ((c.i, c.j), c.effort_km)).collect::<Vec<_>>(), direct);
        let empty = effort_raster(&CatchGraph::default(), &FilterSpec::default(), bin(1), None);
        assert!(empty.cells.is_empty());
    }

    #[test]
    fn effort_ignores_catch_level_predicates_but_honours_dates() {
        let cat = Catalog::from_records(vec![
            rec(0, "A", 1, -60.0, 10.0),
            rec(1, "A", 3, -62.0, 14.0),
            rec(2, "B", 10, -60.0, 10.0),
            rec(3, "B", 12, -62.0, 14.0),
        ])
        .unwrap();
        let g = build_graph(&cat, &FilterSpec::default());
        let species = FilterSpec { species: Some([Species::Fin].into()), ..Default::default() };
        assert_eq!(effort_raster(&g, &species, bin(5), None).edge_count, 2);
        let nation = FilterSpec { nations: Some(["JPN".to_string()].into()), ..Default::default() };
        assert_eq!(effort_raster(&g, &nation, bin(5), None).edge_count, 1);
        let day = |d| NaiveDate::from_ymd_opt(1950, 1, d).unwrap();
        let early = DateRange::between(day(2), day(5));
        assert_eq!(effort_raster(&g, &FilterSpec::default(), bin(5), Some(&early)).edge_count, 1);
        let touching = DateRange::between(day(3), day(10));
        assert_eq!(effort_raster(&g, &FilterSpec::default(), bin(5), Some(&touching)).edge_count, 2);
    }

    #[test]
    fn cpue_examples() {
        let cat = Catalog::from_records(vec![]).unwrap();
        let mut catches = crate::grid::bin_catches(&cat, &FilterSpec::default(), bin(5));
        catches.cells.push(crate::grid::BinnedCell { i: 1, j: 1, agg: crate::grid::CellAggregate { count: 12, ..Default::default() } });
        catches.cells.push(crate::grid::BinnedCell { i: 3, j: 3, agg: crate::grid::CellAggregate { count: 4, ..Default::default() } });
        let effort = EffortRaster {
            bin_deg: bin(5),
            edge_count: 0,
            edge_length_km: 0.0,
            total_km: 0.0,
            cells: vec![
                EffortCell { i: 0, j: 0, effort_km: 500.0 },
                EffortCell { i: 1, j: 1, effort_km: 3000.0 },
                EffortCell { i: 3, j: 3, effort_km: 50.0 },
            ],
        };
        let g = cpue_grid(&catches, &effort, DEFAULT_MIN_EFFORT_KM).unwrap();
        let zero = g.get((0, 0)).unwrap();
        assert_eq!((zero.cpue, zero.defined), (Some(0.0), true));
        assert_eq!(g.get((1, 1)).unwrap().cpue, Some(4.0));
        let thin = g.get((3, 3)).unwrap();
        assert_eq!((thin.cpue, thin.defined, thin.catch_without_effort), (None, false, true));
        assert_eq!(g.pooled_cpue(), Some(12.0 / 3.5));
        let other = EffortRaster { bin_deg: bin(1), ..effort };
        assert!(matches!(cpue_grid(&catches, &other, 100.0), Err(EffortError::Grid(AggError::BinMismatch(5, 1)))));
    }

    #[test]
    fn diffusion_small_cases() {
        let cat = Catalog::from_records(vec![rec(0, "A", 1, 0.0, 0.0), rec(1, "A", 2, 0.0, 1.0), rec(2, "B", 1, 5.0, 5.0)]).unwrap();
        let g = build_graph(&cat, &FilterSpec::default());
        let w = vec![1.0, 0.0, 2.0];
        assert_eq!(diffuse_effort(&g, &w, DiffusionParams::new(0.5, 0).unwrap()).unwrap(), w);
        let out = diffuse_effort(&g, &w, DiffusionParams::new(0.5, 1).unwrap()).unwrap();
        assert_eq!(out, vec![0.5, 0.5, 2.0]);
        assert!(DiffusionParams::new(1.0, 3).is_err());
        assert!(matches!(diffuse_effort(&g, &[1.0], DiffusionParams::new(0.5, 1).unwrap()), Err(EffortError::WeightCount { .. })));
        assert!(matches!(diffuse_effort(&g, &[1.0, -1.0, 0.0], DiffusionParams::new(0.5, 1).unwrap()), Err(EffortError::NegativeWeight(1))));
        assert_eq!(node_catch_counts(&g), vec![1.0, 1.0, 1.0]);
    }
}
