//! Property tests for the exact lattice and polyhedral layers against
//! brute-force oracles.

mod common;

use std::collections::BTreeSet;

use acv_core::chart::unimodular_subdivide;
use acv_core::lattice::{self, invert_unimodular, ivec, IntMat, IntVec};
use acv_core::polyhedra::{convex_hull, dual_cone, lattice_volume_from, ConeRep};
use common::{brute_force_facets, elementary_product, shoelace_twice};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn int_points(dim: usize, max_len: usize, range: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-range..=range, dim), 1..=max_len)
}

fn to_ivecs(p: &[Vec<i64>]) -> Vec<IntVec> {
    p.iter().map(|v| ivec(v)).collect()
}




proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unimodular_inverse_is_exact(
        n in 1usize..=6,
        ops in prop::collection::vec((0usize..6, 0usize..6, -3i64..=3, any::<bool>()), 0..14),
    ) {
        let w = elementary_product(n, &ops);
        prop_assert!(w.det().abs().is_one());
        let m = invert_unimodular(&w).unwrap();
        prop_assert!(w.mul(&m).is_identity());
        prop_assert!(m.mul(&w).is_identity());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn hull_matches_brute_force(dim in 2usize..=4, pts in prop::collection::vec(prop::collection::vec(-3i64..=3, 4), 1..=12)) {
        let pts: Vec<IntVec> = pts.iter().map(|p| ivec(&p[..dim])).collect();
        let hull = convex_hull(&pts).unwrap();
        prop_assume!(hull.intrinsic_dim == dim);
        let found: BTreeSet<(IntVec, BigInt)> =
            hull.facets().iter().map(|f| (f.normal.clone(), f.offset.clone())).collect();
        prop_assert_eq!(&found, &brute_force_facets(&pts, dim));
        // a vertex lies on facets whose normals span the space
        let mut verts: Vec<IntVec> = pts
            .iter()
            .filter(|p| {
                let tight: Vec<IntVec> =
                    found.iter().filter(|(a, c)| &lattice::dot(a, p) == c).map(|(a, _)| a.clone()).collect();
                lattice::rank(&tight) == dim
            })
            .cloned()
            .collect();
        verts.sort();
        verts.dedup();
        let mut hv = hull.vertices.clone();
        hv.sort();
        prop_assert_eq!(&hv, &verts);
        // idempotence
        let again = convex_hull(&hull.vertices).unwrap();
        let mut av = again.vertices.clone();
        av.sort();
        prop_assert_eq!(av, hv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn polygon_volume_ignores_the_triangulation(pts in int_points(2, 9, 5)) {
        let pts = to_ivecs(&pts);
        let hull = convex_hull(&pts).unwrap();
        prop_assume!(hull.intrinsic_dim == 2);
        let basis = vec![ivec(&[1, 0]), ivec(&[0, 1])];
        let expect = shoelace_twice(&hull.vertices);
        for apex in 0..hull.vertices.len() {
            prop_assert_eq!(lattice_volume_from(&hull, &basis, apex).unwrap(), expect.clone());
        }
    }

    #[test]
    fn double_dual_is_the_cone(dim in 2usize..=4, gens in prop::collection::vec(prop::collection::vec(-3i64..=3, 4), 1..=5)) {
        let gens: Vec<IntVec> = gens.iter().map(|g| ivec(&g[..dim])).filter(|g| !lattice::is_zero(g)).collect();
        prop_assume!(!gens.is_empty());
        let c = ConeRep::new(gens);
        let dd = dual_cone(&dual_cone(&c));
        for g in &c.generators {
            prop_assert!(dd.contains(g));
        }
        for g in &dd.generators {
            prop_assert!(c.contains(g));
        }
    }

    #[test]
    fn subdivision_covers_the_cone(
        gens in prop::collection::vec(prop::collection::vec(0i64..=4, 3), 3..=5),
        probes in prop::collection::vec(prop::collection::vec(0i64..=5, 5), 6),
    ) {
        let gens: Vec<IntVec> = gens.iter().map(|g| ivec(g)).filter(|g| !lattice::is_zero(g)).collect();
        prop_assume!(lattice::rank(&gens) == 3);
        let c = ConeRep::new(gens.clone());
        let fan = unimodular_subdivide(&c, 10_000).unwrap();
        prop_assert!(!fan.cones.is_empty());
        for sub in &fan.cones {
            prop_assert!(IntMat::from_rows(&sub.generators).det().abs().is_one());
            for g in &sub.generators {
                prop_assert!(c.contains(g));
            }
        }
        for w in &probes {
            let mut p = vec![BigInt::zero(); 3];
            for (g, &a) in gens.iter().zip(w) {
                p = lattice::add(&p, &lattice::scale(g, &BigInt::from(a)));
            }
            prop_assert!(fan.cones.iter().any(|s| s.contains(&p)));
        }
    }
}
