//! End-to-end runs through the public API: sampled instances feed the
//! distance kernel, walls feed the embeddings, and the whole chain is
//! held against the axioms it promises.

use std::collections::BTreeMap;

use proptest::prelude::*;

use cw_core::analysis::certify_c1c2;
use cw_core::boxspace::{build_wreath_chain, check_m_chain, finite_h_box, SubgroupChainZ};
use cw_core::group::{FiniteGroup, FiniteWreathGroup};
use cw_core::rational::{qi, qzero, Q};
use cw_core::samples::{lamplighter_fixture, random_instance, random_walls, rng};
use cw_core::selftest::ball_of_at_least;
use cw_core::walls::{cut_decompose, embed_l1, CutDecomposition};
use cw_core::wreath::{wreath_distance, WreathInstance, WreathPoint};

fn random_point(r: &mut rand_chacha::ChaCha8Rng, inst: &WreathInstance) -> WreathPoint {
    use rand::Rng;
    let mut f = BTreeMap::new();
    for site in 0..inst.z.n() {
        if r.gen_bool(0.3) {
            let v = r.gen_range(0..inst.x.n());
            if v != inst.basepoint {
                f.insert(site, v);
            }
        }
    }
    let y = r.gen_range(0..inst.y.n());
    WreathPoint::new(inst, f, y).expect("sampled point is well-formed")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The product distance is a metric on sampled triples: zero on the
    /// diagonal, symmetric, and triangle-subadditive.
    #[test]
    fn wreath_distance_is_a_metric_on_samples(seed in 0u64..(1u64 << 48)) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r).unwrap();
        let pts: Vec<WreathPoint> = (0..3).map(|_| random_point(&mut r, &inst)).collect();
        let d = |a: &WreathPoint, b: &WreathPoint| wreath_distance(&inst, a, b).unwrap();
        for p in &pts {
            prop_assert_eq!(d(p, p), qzero());
        }
        let (ab, ba) = (d(&pts[0], &pts[1]), d(&pts[1], &pts[0]));
        prop_assert_eq!(&ab, &ba);
        let (bc, ac) = (d(&pts[1], &pts[2]), d(&pts[0], &pts[2]));
        prop_assert!(ac <= ab.clone() + bc.clone(), "triangle failed: {} > {} + {}", ac, ab, bc);
    }

    /// L¹ wall embeddings and cut decomposition agree with the wall
    /// pseudometric in both directions.
    #[test]
    fn walls_embed_and_decompose_round_trip(seed in 0u64..(1u64 << 48)) {
        let mut r = rng(seed);
        use rand::Rng;
        let n = r.gen_range(2..=7);
        let walls = random_walls(&mut r, n, 10).unwrap();
        let table = embed_l1(&walls).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                prop_assert_eq!(table.dist_pow(i, j), walls.wall_metric(i, j));
            }
        }
        let space = walls.wall_metric_space().unwrap();
        match cut_decompose(&space).unwrap() {
            CutDecomposition::Decomposed(w) => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        prop_assert_eq!(&w.wall_metric(i, j), space.d(i, j));
                    }
                }
            }
            CutDecomposition::Infeasible(_) => {
                prop_assert!(false, "wall metrics always decompose into cuts");
            }
        }
    }
}

/// The shipped lamplighter instance certifies on a small ball end to end.
#[test]
fn fixture_ball_certifies() {
    let (inst, triple) = lamplighter_fixture().unwrap();
    let points = ball_of_at_least(&inst, 80).unwrap();
    assert!(points.len() >= 80);
    let (report, inputs) = certify_c1c2(&inst, &triple, &points).unwrap();
    assert!(report.is_certified(), "violations: {:?}", report.violations);
    assert!(report.c2_evaluated);
    assert_eq!(inputs.geometry.chosen, Some(0));
}

/// A two-level integer tower and a finite-top tower both pass their
/// structural checks through the public entry points.
#[test]
fn towers_check_out_both_ways() {
    let z2 = FiniteGroup::cyclic(2).unwrap();
    let k = vec![std::collections::BTreeSet::from([0usize]); 2];

    let chain = build_wreath_chain(
        &z2,
        &k,
        &SubgroupChainZ::new(vec![2, 4]).unwrap(),
        FiniteWreathGroup::DEFAULT_CAP,
    )
    .unwrap();
    let report = check_m_chain(&chain, 3).unwrap();
    assert!(report.all_ok(), "nesting: {:?}, triviality: {:?}", report.nesting_witness, report.triviality_witness);

    let z4 = FiniteGroup::cyclic(4).unwrap();
    let finite = finite_h_box(&z2, &k, &z4, FiniteWreathGroup::DEFAULT_CAP).unwrap();
    let freport = check_m_chain(&finite, 3).unwrap();
    assert!(freport.all_ok());
    assert_eq!(finite.levels[0].group.order(), 2usize.pow(4) * 4);
}

/// Distances of the fixture survive a JSON round trip of the instance.
#[test]
fn instance_json_round_trip_preserves_distances() {
    let (inst, _) = lamplighter_fixture().unwrap();
    let dto = cw_core::io::InstanceDto::from_instance(&inst);
    let text = serde_json::to_string(&dto).unwrap();
    let back: cw_core::io::InstanceDto = serde_json::from_str(&text).unwrap();
    let inst2 = back.to_instance().unwrap();

    let a = WreathPoint::rest(&inst, 0);
    let b = WreathPoint::new(&inst, BTreeMap::from([(1usize, 1usize), (4, 1)]), 0).unwrap();
    let d1 = wreath_distance(&inst, &a, &b).unwrap();

    let a2 = WreathPoint::rest(&inst2, 0);
    let b2 = WreathPoint::new(&inst2, BTreeMap::from([(1usize, 1usize), (4, 1)]), 0).unwrap();
    let d2 = wreath_distance(&inst2, &a2, &b2).unwrap();
    assert_eq!(d1, d2);
    assert_eq!(d1, qi(6));
}

/// Certification bounds are monotone in the radius argument, so checking
/// each pair at its own attained value settles all smaller radii.
#[test]
fn certification_bounds_are_monotone() {
    let (inst, triple) = lamplighter_fixture().unwrap();
    let inputs = cw_core::analysis::CertInputs::derive(&inst, &triple).unwrap();
    let grid: Vec<Q> = (0..12).map(|k| qi(k)).collect();
    let mut last_c1 = qzero();
    for r in &grid {
        let c1 = inputs.c1_bound(r);
        assert!(c1 >= last_c1, "C1 regressed at {}", r);
        last_c1 = c1;
    }
    let mut last_c2 = qzero();
    for r in &grid {
        let c2 = inputs.c2_bound(r).expect("hypothesis set 0 holds on the fixture");
        assert!(c2 >= last_c2, "C2 regressed at {}", r);
        last_c2 = c2;
    }
}
