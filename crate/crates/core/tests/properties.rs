//! Randomized invariants on small generated graphs.

use proptest::prelude::*;

use mmcheck_core::dimension::{covering_number, hausdorff_distance, maximal_separated_set};
use mmcheck_core::space::{
    components, geodesic_shadow, region, DiscreteSpace, EdgeSpec, Region, RegionKind,
    ShadowParams, VertexSpec,
};
use mmcheck_core::volumes::volume;

/// Connected graph: a random tree plus a few random chords, with random
/// positive weights and edge lengths in [0.5, 1.5].
fn arb_space() -> impl Strategy<Value = DiscreteSpace> {
    (3usize..10)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> =
                (1..n).map(|i| (0..i).boxed()).collect();
            let weights = proptest::collection::vec(0.1f64..2.0, n);
            let lengths = proptest::collection::vec(0.5f64..1.5, n - 1);
            let chords = proptest::collection::vec((0..n, 0..n, 0.5f64..1.5), 0..3);
            (Just(n), parents, weights, lengths, chords)
        })
        .prop_map(|(n, parents, weights, lengths, chords)| {
            let vertices: Vec<VertexSpec> = (0..n)
                .map(|i| VertexSpec { id: format!("v{i}"), weight: weights[i], coord: None })
                .collect();
            let mut edges: Vec<EdgeSpec> = parents
                .iter()
                .enumerate()
                .map(|(i, &p)| EdgeSpec {
                    u: format!("v{}", i + 1),
                    v: format!("v{p}"),
                    len: lengths[i],
                })
                .collect();
            for (a, b, len) in chords {
                if a != b {
                    edges.push(EdgeSpec { u: format!("v{a}"), v: format!("v{b}"), len });
                }
            }
            DiscreteSpace::new(vertices, edges, 1.5, None).expect("tree plus chords connects")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn components_partition_the_region(space in arb_space(), r in 0.5f64..3.0) {
        let reg = region(&space, RegionKind::ClosedBall, 0, r, 0.0).unwrap();
        let comps = components(&space, &reg, &[]);
        let mut seen: Vec<usize> = comps.iter().flat_map(|c| c.members.iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, reg.members.clone());
        let total: f64 = comps.iter().map(|c| c.measure).sum();
        prop_assert!((total - reg.measure).abs() < 1e-9);
    }

    #[test]
    fn shadow_is_inside_its_annulus_and_tau_between(
        space in arb_space(),
        x in 0usize..3,
        r in 1.0f64..3.0,
    ) {
        let x = x % space.len();
        let params = ShadowParams::new(r / 4.0, r / 2.0, r / 2.0, r, space.tau()).unwrap();
        let u = region(&space, RegionKind::Annulus, x, r / 2.0, r).unwrap();
        if u.is_empty() {
            return Ok(());
        }
        let shadow = geodesic_shadow(&space, x, &u, &params).unwrap();
        let annulus = region(&space, RegionKind::Annulus, x, r / 4.0, r / 2.0).unwrap();
        let row_x = space.row(x);
        for &y in &shadow.members {
            prop_assert!(annulus.contains(y));
            let row_y = space.row(y);
            let excess = u
                .members
                .iter()
                .map(|&z| row_x[y] + row_y[z] - row_x[z])
                .fold(f64::INFINITY, f64::min);
            prop_assert!(excess.abs() <= space.tau() + 1e-9);
        }
    }

    #[test]
    fn shadow_grows_with_u(space in arb_space(), x in 0usize..3, r in 1.0f64..3.0) {
        let x = x % space.len();
        let params = ShadowParams::new(r / 4.0, r / 2.0, r / 2.0, r, space.tau()).unwrap();
        let big = region(&space, RegionKind::Annulus, x, r / 2.0, r).unwrap();
        if big.len() < 2 {
            return Ok(());
        }
        let small = Region::from_members(
            &space,
            RegionKind::Explicit,
            big.members[..big.len() / 2].to_vec(),
        );
        if small.is_empty() {
            return Ok(());
        }
        let s_small = geodesic_shadow(&space, x, &small, &params).unwrap();
        let s_big = geodesic_shadow(&space, x, &big, &params).unwrap();
        for &y in &s_small.members {
            prop_assert!(s_big.contains(y));
        }
    }

    #[test]
    fn rescale_scales_metric_and_measure(
        space in arb_space(),
        a in 0.5f64..3.0,
        b in 0.5f64..3.0,
    ) {
        let scaled = space.rescale(a, b).unwrap();
        prop_assert!((scaled.distance(0, space.len() - 1)
            - a * space.distance(0, space.len() - 1)).abs() < 1e-9);
        prop_assert!((scaled.total_measure() - b * space.total_measure()).abs() < 1e-9);
        // raw ratios of vertex weights are untouched
        prop_assert_eq!(scaled.raw_weight(0), space.raw_weight(0));
    }

    #[test]
    fn model_volume_monotone_in_curvature(
        k1 in -2.0f64..0.0,
        n in 1.5f64..3.5,
        r in 0.2f64..1.5,
    ) {
        // lower curvature spreads volume: V_{k1} >= V_0 >= V_{k>0} on (0, r)
        let lo = volume(k1, n, 0.0, r).unwrap().value;
        let flat = volume(0.0, n, 0.0, r).unwrap().value;
        let hi = volume(1.0, n, 0.0, r.min(3.0)).unwrap().value;
        prop_assert!(lo >= flat - 1e-9);
        if r <= 3.0 {
            prop_assert!(flat >= hi - 1e-9);
        }
    }

    #[test]
    fn volume_scaling_law(k in -1.5f64..1.5, n in 1.0f64..3.5, r in 0.3f64..1.2, a in 0.5f64..2.0) {
        if k > 0.0 && a * r >= std::f64::consts::PI / (k / (a * a)).sqrt() {
            return Ok(());
        }
        let base = volume(k, n, 0.0, r).unwrap().value;
        let scaled = volume(k / (a * a), n, 0.0, a * r).unwrap().value;
        prop_assert!((scaled - a.powf(n) * base).abs() <= 1e-7 * scaled.abs().max(1.0));
    }

    #[test]
    fn separated_at_double_scale_bounded_by_cover(space in arb_space(), delta in 0.4f64..2.0) {
        let sep = maximal_separated_set(&space, 2.0 * delta, 9).len();
        let cover = covering_number(&space, delta);
        prop_assert!(sep <= cover, "separated {} cover {}", sep, cover);
    }

    #[test]
    fn separated_set_is_separated_and_a_net(space in arb_space(), eps in 0.4f64..2.0, seed in 0u64..50) {
        let set = maximal_separated_set(&space, eps, seed);
        prop_assert!(!set.is_empty());
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                prop_assert!(space.distance(a, b) >= eps - 1e-12);
            }
        }
        let to_set = space.distance_to_set(&set);
        prop_assert!(to_set.iter().all(|&d| d <= eps + 1e-12));
    }

    #[test]
    fn hausdorff_distance_triangle(space in arb_space(), cut1 in 1usize..4, cut2 in 1usize..4) {
        let n = space.len();
        let all: Vec<usize> = (0..n).collect();
        let a = Region::from_members(&space, RegionKind::Explicit, all.clone());
        let b = Region::from_members(&space, RegionKind::Explicit, all[..n - cut1.min(n - 1)].to_vec());
        let c = Region::from_members(&space, RegionKind::Explicit, all[cut2.min(n - 1)..].to_vec());
        let dab = hausdorff_distance(&space, &a, &b).unwrap();
        let dbc = hausdorff_distance(&space, &b, &c).unwrap();
        let dac = hausdorff_distance(&space, &a, &c).unwrap();
        prop_assert!(dac <= dab + dbc + 1e-9);
        prop_assert!((hausdorff_distance(&space, &a, &a).unwrap()).abs() < 1e-12);
        prop_assert!((hausdorff_distance(&space, &b, &a).unwrap() - dab).abs() < 1e-12);
    }

    #[test]
    fn restriction_keeps_induced_distances_at_most_original(
        space in arb_space(),
        r in 1.5f64..4.0,
    ) {
        let ball = region(&space, RegionKind::ClosedBall, 0, r, 0.0).unwrap();
        let comps = components(&space, &ball, &[]);
        let home = comps.into_iter().find(|c| c.contains(0)).unwrap();
        if home.len() < 2 {
            return Ok(());
        }
        let sub = space.restrict(&home).unwrap();
        for (i, &v) in home.members.iter().enumerate() {
            for &w in &home.members[i + 1..] {
                let j = home.members.iter().position(|&m| m == w).unwrap();
                prop_assert!(sub.distance(i, j) >= space.distance(v, w) - 1e-9);
            }
        }
    }
}
