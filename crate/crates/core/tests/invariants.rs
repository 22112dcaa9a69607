use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use caravel_core::graph::{components, extract_segments, prune_triangles, select_roots, VesselGraph};
use caravel_core::io::{load_mask, save_cvol};
use caravel_core::phantom::{generate, PhantomSpec};
use caravel_core::pipeline::{analyze, extract_features, vessel_graph, RunConfig};
use caravel_core::regional::regional_features;
use caravel_core::skeleton::{estimate_radii, skeletonize};
use caravel_core::volume::{LabelVolume, VoxelVolume};

fn standard(kind: &str) -> VoxelVolume {
    generate(&PhantomSpec::standard(kind).unwrap()).unwrap().0
}

fn voxel_components(coords: &[[usize; 3]]) -> usize {
    let g = VesselGraph::from_voxels(coords, &vec![1.0; coords.len()], [1.0; 3]);
    components(&g).len()
}

fn dilate(m: &VoxelVolume) -> VoxelVolume {
    VoxelVolume::from_fn(m.dims(), m.spacing(), |c| {
        (-1i64..=1).any(|dx| {
            (-1i64..=1).any(|dy| (-1i64..=1).any(|dz| m.get_signed([c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz])))
        })
    })
    .unwrap()
}

#[test]
fn thinning_preserves_components_of_every_phantom() {
    for kind in PhantomSpec::STANDARD_KINDS {
        let m = standard(kind);
        let fg: Vec<_> = m.foreground().collect();
        let s = skeletonize(&m);
        assert_eq!(voxel_components(&fg), voxel_components(s.voxels()), "{kind}");
    }
}

#[test]
fn pruned_graph_keeps_known_loops() {
    for (kind, loops) in [("torus", 1), ("cycle_pair", 2), ("tube", 0), ("y_junction", 0)] {
        let (_, g) = vessel_graph(&standard(kind), &RunConfig::default()).unwrap();
        assert_eq!(g.cycle_rank(), loops, "{kind}");
    }
}

#[test]
fn dilation_never_shrinks_radii() {
    for kind in ["tube", "torus", "y_junction"] {
        let m = standard(kind);
        let s = skeletonize(&m);
        let before = estimate_radii(&m, &s).unwrap();
        let after = estimate_radii(&dilate(&m), &s).unwrap();
        for (a, b) in before.radii_mm.iter().zip(&after.radii_mm) {
            assert!(b >= a, "{kind}: {a} -> {b}");
        }
    }
}

#[test]
fn graph_bookkeeping_on_random_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let dims = [rng.gen_range(3..10), rng.gen_range(3..10), rng.gen_range(3..10)];
        let p = rng.gen_range(0.1..0.6);
        let m = VoxelVolume::from_fn(dims, [1.0; 3], |_| rng.gen_bool(p)).unwrap();
        let s = skeletonize(&m);
        let raw = VesselGraph::from_voxels(s.voxels(), &vec![1.0; s.len()], m.spacing());
        let pruned = prune_triangles(&raw);
        for g in [&raw, &pruned] {
            let degrees: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
            assert_eq!(degrees, 2 * g.edge_count());
        }
        assert_eq!(components(&raw).len(), components(&pruned).len());

        // insertion order must not change the chosen roots
        let mut shuffled = s.voxels().to_vec();
        shuffled.shuffle(&mut rng);
        let other = prune_triangles(&VesselGraph::from_voxels(&shuffled, &vec![1.0; shuffled.len()], m.spacing()));
        let roots = |g: &VesselGraph| -> HashSet<Vec<[usize; 3]>> {
            components(g)
                .iter()
                .map(|c| select_roots(c, g).as_array().iter().map(|&r| g.coord(r)).collect())
                .collect()
        };
        assert_eq!(roots(&pruned), roots(&other));
    }
}

/// Every simple path, no pruning at all.
fn all_simple_paths_min(g: &VesselGraph, from: usize, to: usize) -> f64 {
    fn go(g: &VesselGraph, v: usize, to: usize, w: f64, on: &mut [bool], best: &mut f64) {
        if v == to {
            *best = best.min(w);
            return;
        }
        on[v] = true;
        for &(u, _) in g.neighbors(v) {
            if !on[u] {
                go(g, u, to, w + g.edge_weight(v, u).unwrap(), on, best);
            }
        }
        on[v] = false;
    }
    let mut best = f64::INFINITY;
    go(g, from, to, 0.0, &mut vec![false; g.node_count()], &mut best);
    best
}

#[test]
fn segments_are_shortest_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(2..=12);
        let mut coords = BTreeSet::new();
        while coords.len() < n {
            coords.insert([rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3)]);
        }
        let coords: Vec<[usize; 3]> = coords.into_iter().collect();
        let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let spacing = [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)];
        let g = VesselGraph::from_voxels(&coords, &radii, spacing);
        for c in components(&g) {
            for root in select_roots(&c, &g).as_array() {
                for p in extract_segments(&c, &g, root).unwrap().paths {
                    let end = *p.nodes.last().unwrap();
                    let best = all_simple_paths_min(&g, root, end);
                    assert!((p.geodesic_length_mm - best).abs() <= 1e-12, "{} vs {best}", p.geodesic_length_mm);
                    checked += 1;
                }
            }
        }
    }
}

#[test]
fn dimensionless_features_ignore_scale() {
    for kind in ["helix", "y_junction"] {
        let m = standard(kind);
        let f1 = extract_features(&m, &RunConfig::default()).unwrap();
        let f2 = extract_features(&m.with_spacing([0.5; 3]).unwrap(), &RunConfig::default()).unwrap();
        assert_eq!(f1.fractal_dimension, f2.fractal_dimension, "{kind}");
        assert_eq!(f1.lacunarity, f2.lacunarity, "{kind}");
        let (a, b) = (f1.arc_over_chord.unwrap(), f2.arc_over_chord.unwrap());
        assert!((a - b).abs() <= 1e-9 * a, "{kind}: {a} vs {b}");
        assert!((f2.mean_square_curvature_per_mm2.unwrap() - 4.0 * f1.mean_square_curvature_per_mm2.unwrap()).abs() < 1e-9);
    }
}

#[test]
fn curvature_moments_vanish_together() {
    for kind in ["tube", "helix", "torus", "y_junction"] {
        let f = extract_features(&standard(kind), &RunConfig::default()).unwrap();
        let (k, k2) = (f.mean_curvature_per_mm.unwrap(), f.mean_square_curvature_per_mm2.unwrap());
        assert!(k >= 0.0 && k2 >= 0.0, "{kind}");
        assert_eq!(k == 0.0, k2 == 0.0, "{kind}");
    }
}

#[test]
fn helix_segment_matches_analytic_integral() {
    // one open segment, multiplicity 1: (1/L)∫κ ds of a helix is its constant curvature
    let a = analyze(&standard("helix"), &RunConfig::default()).unwrap();
    assert_eq!(a.graph.node_count() - a.graph.edge_count(), 1);
    let k = a.features.mean_curvature_per_mm.unwrap();
    assert!((k - 0.08).abs() <= 0.15 * 0.08, "{k}");
}

#[test]
fn regions_follow_label_permutation() {
    let m = standard("y_junction");
    let atlas = LabelVolume::from_fn(m.dims(), |c| 1 + (c[0] * 3 / m.dims()[0]) as u32).unwrap();
    let map = |l: u32| if l == 0 { 0 } else { 4 - l };
    let cfg = RunConfig::default();
    let a = regional_features(&m, &atlas, &cfg).unwrap();
    let b = regional_features(&m, &atlas.permute_labels(map), &cfg).unwrap();
    assert_eq!(a.global, b.global);
    assert_eq!(a.global, extract_features(&m, &cfg).unwrap());
    for r in &a.regions {
        let other = b.region(map(r.region_id)).unwrap();
        assert_eq!(r.features, other.features);
        assert!(r.features.volume_mm3 <= a.global.volume_mm3);
    }
}

#[test]
fn reloading_a_mask_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let m = standard("torus").with_spacing([0.7, 0.8, 0.9]).unwrap();
    let p1 = dir.path().join("a.cvol");
    save_cvol(&p1, &m).unwrap();
    let once = load_mask(&p1).unwrap();
    let p2 = dir.path().join("b.cvol");
    save_cvol(&p2, &once).unwrap();
    let twice = load_mask(&p2).unwrap();
    assert_eq!(once, twice);
    assert_eq!(once, m);
    assert_eq!(once.count(), m.data().iter().filter(|&&b| b != 0).count());
}
