mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use catchmap_core::effort::{cpue_grid, effort_raster, effort_raster_with, rasterize_arc};
use catchmap_core::grid::{bin_catches, BinSize};
use catchmap_core::ingest::ingest_readers;
use catchmap_core::model::{Catalog, DateRange, FilterSpec};
use catchmap_core::par::Exec;
use catchmap_core::route::build_graph;
use catchmap_core::synth::{self, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{haversine_km, oracle_raster};

const SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    General,
    Long,
    Antimeridian,
    Polar,
}

fn wrap(lon: f64) -> f64 {
    let l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l >= 180.0 { l - 360.0 } else { l }
}

fn random_edge(rng: &mut ChaCha8Rng, kind: Kind) -> ((f64, f64), (f64, f64)) {
    loop {
        let (a, b) = match kind {
            Kind::General => {
                let a = (rng.random_range(-80.0..80.0), rng.random_range(-180.0..180.0));
                let b = (a.0 + rng.random_range(-6.0..6.0f64), wrap(a.1 + rng.random_range(-8.0..8.0)));
                (a, (b.0.clamp(-89.9, 89.9), b.1))
            }
            Kind::Long => {
                let a = (rng.random_range(-85.0..85.0), rng.random_range(-180.0..180.0));
                let b = (rng.random_range(-85.0..85.0), rng.random_range(-180.0..180.0));
                (a, b)
            }
            Kind::Antimeridian => {
                let a = (rng.random_range(-75.0..75.0), rng.random_range(165.0..180.0));
                let b = (rng.random_range(-75.0..75.0), rng.random_range(-180.0..-165.0));
                if rng.random_bool(0.5) { (a, b) } else { (b, a) }
            }
            Kind::Polar => {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let a = (s * rng.random_range(60.5..89.9), rng.random_range(-180.0..180.0));
                let b = (s * rng.random_range(60.5..89.9), rng.random_range(-180.0..180.0));
                (a, b)
            }
        };
        // an antipodal pair has no unique great circle
        if haversine_km(a, b) < 0.97 * std::f64::consts::PI * 6371.0 {
            return (a, b);
        }
    }
}

#[test]
fn rasterization_conserves_length_and_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let kinds: Vec<Kind> = (0..10_000)
        .map(|k| match k % 10 {
            0 => Kind::Antimeridian,
            1 => Kind::Polar,
            2 => Kind::Long,
            _ => Kind::General,
        })
        .collect();
    let start = Instant::now();
    let mut crossers = 0;
    for (k, kind) in kinds.iter().enumerate() {
        let (a, b) = random_edge(&mut rng, *kind);
        let len = haversine_km(a, b);
        let bin = [1, 2, 5, 10][k % 4];
        let got: BTreeMap<(u32, u32), f64> = rasterize_arc(a, b, len, BinSize::new(bin).unwrap()).into_iter().collect();
        let total: f64 = got.values().sum();
        assert!((total - len).abs() <= 0.01 * len, "{kind:?} {a:?}->{b:?}: {total} vs {len}");

        let want = oracle_raster(a, b, len, bin, SAMPLES);
        let cells: BTreeSet<&(u32, u32)> = got.keys().chain(want.keys()).collect();
        for c in cells {
            let (g, w) = (got.get(c).copied().unwrap_or(0.0), want.get(c).copied().unwrap_or(0.0));
            assert!((g - w).abs() <= 0.01 * len, "{kind:?} {a:?}->{b:?} bin {bin} cell {c:?}: {g} vs {w}");
        }
        if *kind == Kind::Antimeridian {
            crossers += usize::from(got.keys().any(|c| c.1 == 0) && got.keys().any(|c| c.1 == 360 / bin - 1));
        }
    }
    assert!(crossers >= 100, "{crossers} edges actually crossed the antimeridian");
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

fn small_catalog(seed: u64) -> Catalog {
    let spec = SynthSpec { expeditions: 300, ..SynthSpec::progression_demo(seed) };
    let bytes = synth::generate(&spec).to_csv_bytes();
    ingest_readers(vec![("s.csv".to_string(), bytes.as_slice())], &synth::column_mapping()).unwrap().0
}

#[test]
fn raster_is_independent_of_execution_mode() {
    let catalog = small_catalog(3);
    let graph = build_graph(&catalog, &FilterSpec::default());
    for bin in [1, 5] {
        let bin = BinSize::new(bin).unwrap();
        let seq = effort_raster_with(Exec::Sequential, &graph, &FilterSpec::default(), bin, None);
        let par = effort_raster_with(Exec::Parallel, &graph, &FilterSpec::default(), bin, None);
        assert_eq!(seq, par);
        assert!((seq.total_km - seq.edge_length_km).abs() <= 1e-9 * seq.edge_length_km);
    }
}

#[test]
fn raster_is_additive_over_disjoint_expedition_sets() {
    let catalog = small_catalog(4);
    let graph = build_graph(&catalog, &FilterSpec::default());
    let nations: Vec<String> = graph.tracks.iter().map(|t| t.nation.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let (left, right) = nations.split_at(nations.len() / 2);
    let with = |ns: &[String]| FilterSpec { nations: Some(ns.iter().cloned().collect()), ..Default::default() };
    let bin = BinSize::new(2).unwrap();
    let a = effort_raster(&graph, &with(left), bin, None);
    let b = effort_raster(&graph, &with(right), bin, None);
    let all = effort_raster(&graph, &with(&nations), bin, None);
    assert_eq!(a.edge_count + b.edge_count, all.edge_count);
    let mut sum: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for c in a.cells.iter().chain(&b.cells) {
        *sum.entry((c.i, c.j)).or_default() += c.effort_km;
    }
    assert_eq!(sum.len(), all.cells.len());
    for c in &all.cells {
        let s = sum[&(c.i, c.j)];
        assert!((s - c.effort_km).abs() <= 1e-9 * c.effort_km.max(1.0), "{c:?} vs {s}");
    }
}

#[test]
fn date_range_selects_edges_by_interval_overlap() {
    let catalog = small_catalog(5);
    let graph = build_graph(&catalog, &FilterSpec::default());
    let range = DateRange::between(support::day(1950, 1, 1), support::day(1959, 12, 31));
    let raster = effort_raster(&graph, &FilterSpec::default(), BinSize::new(5).unwrap(), Some(&range));
    let want: Vec<f64> = graph
        .edges
        .iter()
        .filter(|e| e.arrive_date >= range.start.unwrap() && e.depart_date <= range.end.unwrap())
        .map(|e| e.length_km)
        .collect();
    assert_eq!(raster.edge_count as usize, want.len());
    let total: f64 = want.iter().sum();
    assert!((raster.total_km - total).abs() <= 1e-9 * total);
}

#[test]
fn cpue_never_reports_zero_for_undefined() {
    let catalog = small_catalog(6);
    let graph = build_graph(&catalog, &FilterSpec::default());
    let filter = catchmap_core::query::parse_filter_str("species=blue").unwrap();
    for bin in [1, 5, 10] {
        let bin = BinSize::new(bin).unwrap();
        let catches = bin_catches(&catalog, &filter, bin);
        let effort = effort_raster(&graph, &filter, bin, None);
        let grid = cpue_grid(&catches, &effort, 100.0).unwrap();
        for c in &grid.cells {
            assert_eq!(c.defined, c.cpue.is_some());
            if c.defined {
                assert!(c.effort_km >= 100.0);
                let want = c.catches as f64 / (c.effort_km / 1000.0);
                assert!((c.cpue.unwrap() - want).abs() <= 1e-12 * want.max(1.0));
            } else {
                assert_eq!(c.catch_without_effort, c.catches > 0);
            }
        }
        let defined: Vec<_> = grid.cells.iter().filter(|c| c.defined).collect();
        if !defined.is_empty() {
            let pooled = defined.iter().map(|c| c.catches as f64).sum::<f64>() / defined.iter().map(|c| c.effort_km).sum::<f64>() * 1000.0;
            assert!((grid.pooled_cpue().unwrap() - pooled).abs() <= 1e-12 * pooled.max(1.0));
        }
    }
}
