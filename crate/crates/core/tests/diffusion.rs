mod support;

use catchmap_core::effort::{diffuse_effort, node_catch_counts, DiffusionParams};
use catchmap_core::model::ExpeditionType;
use catchmap_core::route::{CatchGraph, RouteEdge, TrackStop, TrackSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{dense_operator, haversine_km, mat_pow, mat_vec};

/// Graph with arbitrary topology over `n` random nodes. Some nodes stay
/// isolated.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (CatchGraph, Vec<(usize, usize, f64)>) {
    let d = support::day(1950, 1, 1);
    let nodes: Vec<TrackStop> = (0..n)
        .map(|k| TrackStop {
            lat: rng.random_range(-70.0..70.0),
            lon: rng.random_range(-180.0..180.0),
            date_first: d,
            date_last: d,
            catch_record_ids: (0..rng.random_range(0..5u64)).map(|x| k as u64 * 10 + x).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    let mut dense = Vec::new();
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        if a == b {
            b = (b + 1) % n;
        }
        let from = (nodes[a].lat, nodes[a].lon);
        let to = (nodes[b].lat, nodes[b].lon);
        let length_km = haversine_km(from, to).max(1.0);
        dense.push((a, b, 1.0 / length_km));
        edges.push(RouteEdge {
            expedition_id: "X".into(),
            from_stop: a,
            to_stop: b,
            from,
            to,
            depart_date: d,
            arrive_date: d,
            length_km,
        });
    }
    let tracks = vec![TrackSummary {
        expedition_id: "X".into(),
        nation: "NOR".into(),
        expedition_type: ExpeditionType::Pelagic,
        first_node: 0,
        stop_count: n,
        first_edge: 0,
    }];
    (CatchGraph { nodes, edges, tracks }, dense)
}

#[test]
fn matches_dense_operator_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..20 {
        let n = rng.random_range(2..=100);
        let m = rng.random_range(1..=3 * n);
        let (graph, dense) = random_graph(&mut rng, n, m);
        let w0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let alpha = rng.random_range(0.05..0.95);
        for iters in [0, 1, 7, 50] {
            let got = diffuse_effort(&graph, &w0, DiffusionParams::new(alpha, iters).unwrap()).unwrap();
            let want = mat_vec(&mat_pow(&dense_operator(n, &dense, alpha), iters), &w0);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "trial {trial} iters {iters}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn mass_is_conserved_every_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (graph, _) = random_graph(&mut rng, 80, 200);
    let w0 = node_catch_counts(&graph);
    let total: f64 = w0.iter().sum();
    let mut w = w0.clone();
    for _ in 0..50 {
        w = diffuse_effort(&graph, &w, DiffusionParams::new(0.3, 1).unwrap()).unwrap();
        assert!((w.iter().sum::<f64>() - total).abs() < 1e-9);
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}

#[test]
fn zero_iterations_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let (graph, _) = random_graph(&mut rng, 30, 40);
    let w0: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..5.0)).collect();
    assert_eq!(diffuse_effort(&graph, &w0, DiffusionParams::new(0.5, 0).unwrap()).unwrap(), w0);
}

#[test]
fn converges_on_a_connected_graph() {
    // a ring is connected; successive iterates settle
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut graph, _) = random_graph(&mut rng, 20, 0);
    for k in 0..20 {
        let (a, b) = (k, (k + 1) % 20);
        let from = (graph.nodes[a].lat, graph.nodes[a].lon);
        let to = (graph.nodes[b].lat, graph.nodes[b].lon);
        graph.edges.push(RouteEdge {
            expedition_id: "X".into(),
            from_stop: a,
            to_stop: b,
            from,
            to,
            depart_date: graph.nodes[a].date_first,
            arrive_date: graph.nodes[b].date_first,
            length_km: haversine_km(from, to).max(1.0),
        });
    }
    let mut w: Vec<f64> = (0..20).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let step = DiffusionParams::new(0.5, 1).unwrap();
    let mut deltas = Vec::new();
    for _ in 0..2000 {
        let next = diffuse_effort(&graph, &w, step).unwrap();
        deltas.push(next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        w = next;
    }
    assert!(deltas[deltas.len() - 1] < 1e-9, "{}", deltas[deltas.len() - 1]);
    assert!(deltas[1500..].windows(2).all(|p| p[1] <= p[0] + 1e-15));
}

#[test]
fn rejects_bad_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let (graph, _) = random_graph(&mut rng, 5, 4);
    assert!(DiffusionParams::new(0.0, 1).is_err());
    assert!(DiffusionParams::new(1.0, 1).is_err());
    let p = DiffusionParams::new(0.5, 1).unwrap();
    assert!(diffuse_effort(&graph, &[1.0; 4], p).is_err());
    assert!(diffuse_effort(&graph, &[1.0, -1.0, 0.0, 0.0, 0.0], p).is_err());
}
