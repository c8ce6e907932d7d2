use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use qgnn_core::graphbuild::{self, SelectionCuts, SliceSpec};
use qgnn_core::trackdata::{self, EventRecord, ToyConfig};

fn toy(seed: u64, n_particles: usize) -> ToyConfig {
    ToyConfig {
        n_particles,
        seed,
        ..Default::default()
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-9)
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ToyConfig {
        noise_hits_per_layer: 3,
        ..toy(11, 20)
    };
    let event = trackdata::generate_toy_event(&cfg, 7);
    trackdata::write_trackml_event(&event, dir.path()).unwrap();
    assert_eq!(trackdata::list_events(dir.path()).unwrap(), vec![7]);
    let back = trackdata::load_event(dir.path(), 7).unwrap();
    assert_eq!(back.hits.len(), event.hits.len());
    for (a, b) in event.hits.iter().zip(&back.hits) {
        assert_eq!(
            (a.hit_id, a.volume_id, a.layer_id, a.module_id, a.particle_id),
            (b.hit_id, b.volume_id, b.layer_id, b.module_id, b.particle_id)
        );
        for (u, v) in [(a.x, b.x), (a.y, b.y), (a.z, b.z), (a.pt, b.pt)] {
            assert!(rel_close(u, v), "{u} vs {v}");
        }
    }
    assert_eq!(back.particles.len(), event.particles.len());
}

#[test]
fn same_seed_same_event() {
    let cfg = toy(5, 30);
    assert_eq!(
        trackdata::generate_toy_event(&cfg, 2),
        trackdata::generate_toy_event(&cfg, 2)
    );
    assert_ne!(
        trackdata::generate_toy_event(&cfg, 2),
        trackdata::generate_toy_event(&cfg, 3)
    );
}

/// Circle through three points in the transverse plane.
fn circumradius(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    let a = ((q[0] - r[0]).powi(2) + (q[1] - r[1]).powi(2)).sqrt();
    let b = ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)).sqrt();
    let c = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    a * b * c / (2.0 * cross.abs())
}

#[test]
fn helices_recover_pt() {
    let cfg = toy(3, 40);
    let event = trackdata::generate_toy_event(&cfg, 0);
    let mut tracks: BTreeMap<u64, Vec<[f64; 2]>> = BTreeMap::new();
    for h in &event.hits {
        tracks.entry(h.particle_id).or_default().push([h.x, h.y]);
    }
    let mut checked = 0;
    for p in &event.particles {
        // the helix passes through the origin, which pins the circle
        let Some(hits) = tracks.get(&p.particle_id) else {
            continue;
        };
        if hits.len() < 2 {
            continue;
        }
        let radius = circumradius([0.0, 0.0], hits[0], hits[hits.len() - 1]);
        let pt = 0.3 * cfg.field_strength * radius / 1000.0;
        let truth = p.momentum[0].hypot(p.momentum[1]);
        assert!(
            (pt - truth).abs() < 0.01 * truth,
            "particle {}: {pt} vs {truth}",
            p.particle_id
        );
        checked += 1;
    }
    assert!(checked > 30);
}

fn edge_count(event: &EventRecord, cuts: &SelectionCuts) -> usize {
    graphbuild::build_subgraphs(event, cuts, &SliceSpec::default())
        .unwrap()
        .iter()
        .map(|g| g.n_edges())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn true_doublets_are_recalled(seed in 0u64..1000, n in 1usize..60) {
        let event = trackdata::generate_toy_event(&toy(seed, n), 0);
        let cuts = SelectionCuts::default();
        let spec = SliceSpec::default();
        let graphs = graphbuild::build_subgraphs(&event, &cuts, &spec).unwrap();
        for g in &graphs {
            let mut seen = HashSet::new();
            for &(a, b) in &g.edges {
                prop_assert!(seen.insert((a, b)), "duplicate edge");
                prop_assert_eq!(g.layers[b], g.layers[a] + 1);
            }
            // every consecutive same-particle pair inside the slice is a true edge
            let pid: BTreeMap<u64, u64> = event.hits.iter().map(|h| (h.hit_id, h.particle_id)).collect();
            for a in 0..g.n_nodes() {
                for b in 0..g.n_nodes() {
                    if g.layers[b] == g.layers[a] + 1 && pid[&g.hit_ids[a]] == pid[&g.hit_ids[b]] {
                        let k = g.edges.iter().position(|&e| e == (a, b));
                        prop_assert!(k.is_some_and(|k| g.labels[k] == 1), "missing true edge");
                    }
                }
            }
        }
    }

    #[test]
    fn looser_cuts_never_lose_edges(seed in 0u64..1000, slope in 2e-4f64..1e-3, z0 in 20.0f64..200.0, k in 1.0f64..3.0) {
        let event = trackdata::generate_toy_event(&toy(seed, 40), 0);
        let tight = SelectionCuts { dphi_slope_max: slope, z0_max: z0, ..Default::default() };
        let looser_slope = SelectionCuts { dphi_slope_max: slope * k, ..tight.clone() };
        let looser_z0 = SelectionCuts { z0_max: z0 * k, ..tight.clone() };
        let base = edge_count(&event, &tight);
        prop_assert!(edge_count(&event, &looser_slope) >= base);
        prop_assert!(edge_count(&event, &looser_z0) >= base);
    }

    #[test]
    fn graph_files_round_trip(seed in 0u64..1000) {
        let event = trackdata::generate_toy_event(&toy(seed, 30), 0);
        let graphs = graphbuild::build_subgraphs(&event, &SelectionCuts::default(), &SliceSpec::default()).unwrap();
        prop_assert_eq!(graphs.len(), 16);
        for g in &graphs {
            let text = graphbuild::graph_to_text(g);
            let back = graphbuild::graph_from_text(&text).unwrap();
            prop_assert_eq!(graphbuild::graph_to_text(&back), text);
            prop_assert!(g.node_features.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
