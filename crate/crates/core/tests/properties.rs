use std::collections::HashSet;

use proptest::prelude::*;

use caravel_core::features::{fractal_dimension, ScaleBounds};
use caravel_core::graph::components;
use caravel_core::io::cvol;
use caravel_core::phantom::{generate, PhantomSpec};
use caravel_core::pipeline::{analyze, extract_features, RunConfig};
use caravel_core::skeleton::skeletonize;
use caravel_core::stats::{anova_oneway, bh_fdr, quartile_groups, rank, spearman, ttest_pooled};
use caravel_core::volume::VoxelVolume;

fn mask_strategy(max: usize) -> impl Strategy<Value = VoxelVolume> {
    (2..=max, 2..=max, 2..=max, 0.05f64..0.7).prop_flat_map(|(x, y, z, p)| {
        proptest::collection::vec(proptest::bool::weighted(p), x * y * z).prop_map(move |bits| {
            let data = bits.into_iter().map(u8::from).collect();
            VoxelVolume::new([x, y, z], [1.0; 3], data).unwrap()
        })
    })
}

fn flood_components(voxels: &[[usize; 3]]) -> usize {
    let set: HashSet<[i64; 3]> = voxels.iter().map(|c| c.map(|v| v as i64)).collect();
    let mut seen = HashSet::new();
    let mut n = 0;
    for s in &set {
        if !seen.insert(*s) {
            continue;
        }
        n += 1;
        let mut stack = vec![*s];
        while let Some(c) = stack.pop() {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if set.contains(&q) && seen.insert(q) {
                            stack.push(q);
                        }
                    }
                }
            }
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bh_is_permutation_equivariant(p in proptest::collection::vec(0.0f64..=1.0, 1..40), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..p.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let q = bh_fdr(&p);
        let shuffled: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let q2 = bh_fdr(&shuffled);
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(q2[k], q[i]);
        }
    }

    #[test]
    fn bh_is_monotone_and_bounded(p in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
        let q = bh_fdr(&p);
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in idx.windows(2) {
            prop_assert!(q[w[0]] <= q[w[1]]);
        }
        prop_assert!(q.iter().all(|q| (0.0..=1.0).contains(q)));
    }

    #[test]
    fn spearman_is_rank_invariant(xy in proptest::collection::vec((-50i32..50, -1e3f64..1e3), 3..40)) {
        let x: Vec<f64> = xy.iter().map(|v| v.0 as f64).collect();
        let y: Vec<f64> = xy.iter().map(|v| v.1).collect();
        match (spearman(&x, &y), spearman(&rank(&x), &rank(&y))) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.rho, b.rho);
                prop_assert_eq!(a.p, b.p);
                prop_assert!((0.0..=1.0).contains(&a.p));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "rank transform changed definedness"),
        }
    }

    #[test]
    fn anova_two_groups_is_pooled_t_squared(
        a in proptest::collection::vec(-100.0f64..100.0, 2..20),
        b in proptest::collection::vec(-100.0f64..100.0, 2..20),
    ) {
        let f = anova_oneway(&[a.clone(), b.clone()]).unwrap();
        let t = ttest_pooled(&a, &b).unwrap();
        if f.f.is_finite() && f.f > 0.0 {
            prop_assert!((f.f - t.t * t.t).abs() <= 1e-9 * f.f.max(1.0));
            prop_assert!((f.p - t.p).abs() <= 1e-9);
        }
        prop_assert!((0.0..=1.0).contains(&f.eta2));
        prop_assert!(f.omega2 <= f.eta2 + 1e-15);
    }

    #[test]
    fn quartiles_cover_and_order(v in proptest::collection::vec(-1e3f64..1e3, 4..60)) {
        if let Ok(groups) = quartile_groups(&v) {
            for (i, &gi) in groups.iter().enumerate() {
                prop_assert!(gi < 4);
                for (j, &gj) in groups.iter().enumerate() {
                    if v[i] < v[j] {
                        prop_assert!(gi <= gj);
                    }
                }
            }
        }
    }

    #[test]
    fn cvol_round_trip(m in mask_strategy(9), s in (0.1f64..4.0, 0.1f64..4.0, 0.1f64..4.0)) {
        let m = m.with_spacing([s.0, s.1, s.2]).unwrap();
        let back = cvol::decode(&cvol::encode(&m), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn graph_matches_oracles(m in mask_strategy(10)) {
        let a = analyze(&m, &RunConfig::default()).unwrap();
        prop_assert!(a.skeleton.voxels().iter().all(|&c| m.get(c)));
        let comps = components(&a.graph);
        prop_assert_eq!(comps.len(), flood_components(a.skeleton.voxels()));
        prop_assert_eq!(a.features.loop_count, a.graph.edge_count() + comps.len() - a.graph.node_count());
        prop_assert_eq!(skeletonize(&a.skeleton.to_volume()), a.skeleton);
    }

    #[test]
    fn doubling_spacing_scales_exactly(m in mask_strategy(10)) {
        let cfg = RunConfig::default();
        let f1 = extract_features(&m, &cfg).unwrap();
        let f2 = extract_features(&m.with_spacing([2.0; 3]).unwrap(), &cfg).unwrap();
        prop_assert!((f2.total_length_mm - 2.0 * f1.total_length_mm).abs() <= 1e-9 * f1.total_length_mm.max(1.0));
        prop_assert_eq!(f2.volume_mm3, 8.0 * f1.volume_mm3);
        prop_assert_eq!(f1.bifurcation_count, f2.bifurcation_count);
        prop_assert_eq!(f1.loop_count, f2.loop_count);
        prop_assert_eq!(f1.component_count, f2.component_count);
        prop_assert_eq!(f1.fractal_dimension, f2.fractal_dimension);
        if let (Some(k1), Some(k2)) = (f1.mean_curvature_per_mm, f2.mean_curvature_per_mm) {
            prop_assert!((k2 - 0.5 * k1).abs() <= 1e-9 * k1.abs().max(1e-12));
        }
    }
}

#[test]
fn phantoms_are_deterministic() {
    for kind in PhantomSpec::STANDARD_KINDS {
        let spec = PhantomSpec::standard(kind).unwrap();
        let (a, _) = generate(&spec).unwrap();
        let (b, _) = generate(&spec).unwrap();
        assert_eq!(cvol::encode(&a), cvol::encode(&b), "{kind}");
    }
}

#[test]
fn standard_phantoms_meet_their_ground_truth() {
    for kind in ["tube", "torus", "helix", "y_junction", "cycle_pair", "filled_cube", "line"] {
        let (mask, truth) = generate(&PhantomSpec::standard(kind).unwrap()).unwrap();
        let f = extract_features(&mask, &RunConfig::default()).unwrap();
        let failures = truth.failures(&f);
        assert!(failures.is_empty(), "{kind}: {failures:?}");
    }
}

#[test]
fn axis_permutation_keeps_topology() {
    for kind in ["tube", "torus", "helix", "y_junction", "cycle_pair"] {
        let (mask, _) = generate(&PhantomSpec::standard(kind).unwrap()).unwrap();
        let f = extract_features(&mask, &RunConfig::default()).unwrap();
        for axes in [[1, 2, 0], [2, 0, 1], [0, 2, 1]] {
            let g = extract_features(&mask.permuted(axes).unwrap(), &RunConfig::default()).unwrap();
            assert_eq!(f.component_count, g.component_count, "{kind} {axes:?}");
            assert_eq!(f.loop_count, g.loop_count, "{kind} {axes:?}");
            assert_eq!(f.bifurcation_count, g.bifurcation_count, "{kind} {axes:?}");
            assert_eq!(f.volume_mm3, g.volume_mm3);
            let rel = (f.total_length_mm - g.total_length_mm).abs() / f.total_length_mm;
            assert!(rel < 0.05, "{kind} {axes:?}: length {} vs {}", f.total_length_mm, g.total_length_mm);
        }
    }
}

#[test]
fn resolution_doubling_moves_toward_truth_where_it_holds() {
    let tube = |s: f64| {
        let (m, _) = generate(&PhantomSpec::standard("tube").unwrap().with_spacing([s; 3])).unwrap();
        extract_features(&m, &RunConfig::default()).unwrap()
    };
    let coarse = (tube(1.0).total_length_mm - 100.0).abs();
    let fine = (tube(0.5).total_length_mm - 100.0).abs();
    assert!(fine < coarse, "tube length error {coarse} -> {fine}");

    let helix = |s: f64| {
        let (m, _) = generate(&PhantomSpec::standard("helix").unwrap().with_spacing([s; 3])).unwrap();
        extract_features(&m, &RunConfig::default()).unwrap().mean_curvature_per_mm.unwrap()
    };
    let truth = 0.08;
    let coarse = (helix(1.0) - truth).abs();
    let fine = (helix(0.5) - truth).abs();
    assert!(fine < coarse, "helix curvature error {coarse} -> {fine}");
}

#[test]
fn fractal_dimension_is_scale_free() {
    let m = VoxelVolume::from_fn([32; 3], [1.0; 3], |c| c[2] == 7).unwrap();
    let d1 = fractal_dimension(&m, ScaleBounds::default()).unwrap();
    let d2 = fractal_dimension(&m.with_spacing([0.3; 3]).unwrap(), ScaleBounds::default()).unwrap();
    assert_eq!(d1, d2);
    assert!((d1 - 2.0).abs() < 1e-12);
}
