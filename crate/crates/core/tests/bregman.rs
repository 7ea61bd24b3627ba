mod common;

use common::*;
use mspgame::bregman::{inc_fix, project_euclidean, verify_first_order, MirrorMap};
use mspgame::{ratio, ExactOracle, Graph, Oracle, Rational};
use proptest::prelude::*;
use rand::Rng;

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn euclidean_examples() {
    let u24 = Oracle::uniform(4, 2).unwrap();
    let x = inc_fix(&u24, MirrorMap::Euclidean, &[1.0, 1.0, 0.0, 0.0]).unwrap().point;
    assert!(linf(&x, &[1.0, 1.0, 0.0, 0.0]) < 1e-12);
    let x = inc_fix(&u24, MirrorMap::Euclidean, &[0.0; 4]).unwrap().point;
    assert!(linf(&x, &[0.5; 4]) < 1e-12);
    let k3 = Oracle::graphic(Graph::complete(3)).unwrap();
    let x = inc_fix(&k3, MirrorMap::Entropy, &[1.0; 3]).unwrap().point;
    assert!(linf(&x, &[2.0 / 3.0; 3]) < 1e-12);
}

#[test]
fn exact_projection_on_rationals() {
    // The projection of y onto U(2,3) is y shifted by (2 - y(E))/3 when that
    // stays below the cap of one per element.
    let f = ExactOracle::uniform(3, 2).unwrap();
    let y = vec![ratio(1, 2), ratio(1, 3), ratio(1, 5)];
    let res = project_euclidean(&f, &y).unwrap();
    let shift = (ratio(2, 1) - ratio(1, 2) - ratio(1, 3) - ratio(1, 5)) / ratio(3, 1);
    let expected: Vec<Rational> = y.iter().map(|v| v + &shift).collect();
    assert_eq!(res.point, expected);

    // A cap binds: y0 is far above the others.
    let y = vec![ratio(3, 1), ratio(0, 1), ratio(0, 1)];
    let res = project_euclidean(&f, &y).unwrap();
    assert_eq!(res.point, vec![ratio(1, 1), ratio(1, 2), ratio(1, 2)]);
}

#[test]
fn first_order_check_finds_failing_prefix() {
    let f = Oracle::uniform(4, 2).unwrap();
    let y = [0.9, 0.5, 0.1, 0.1];
    let res = verify_first_order(&f, MirrorMap::Euclidean, &y, &[0.5; 4]).unwrap();
    assert!(!res.optimal);
    assert_eq!(res.failing_prefix, Some(0));
    let x = inc_fix(&f, MirrorMap::Euclidean, &y).unwrap().point;
    assert!(verify_first_order(&f, MirrorMap::Euclidean, &y, &x).unwrap().optimal);
}

#[test]
fn entropy_rejects_nonpositive_targets() {
    let f = Oracle::uniform(3, 1).unwrap();
    assert!(inc_fix(&f, MirrorMap::Entropy, &[1.0, 0.0, 1.0]).is_err());
}

fn random_target(r: &mut rand_chacha::ChaCha8Rng, m: usize, map: MirrorMap) -> Vec<f64> {
    match map {
        MirrorMap::Euclidean => (0..m).map(|_| r.gen_range(-1.5..2.5)).collect(),
        MirrorMap::Entropy => (0..m).map(|_| r.gen_range(0.05..3.0)).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn euclidean_matches_decomposition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 6);
        let y = random_target(&mut r, inst.m(), MirrorMap::Euclidean);
        let got = inc_fix(&inst.oracle, MirrorMap::Euclidean, &y).unwrap();
        let oracle = decomposition_projection(&inst, &y, Divergence::Euclidean);
        prop_assert!(linf(&got.point, &oracle) < 1e-6, "{} y={:?} got={:?} want={:?}", inst.name, y, got.point, oracle);
    }

    #[test]
    fn entropy_matches_decomposition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 6);
        let y = random_target(&mut r, inst.m(), MirrorMap::Entropy);
        let got = inc_fix(&inst.oracle, MirrorMap::Entropy, &y).unwrap();
        let oracle = decomposition_projection(&inst, &y, Divergence::Entropy);
        prop_assert!(linf(&got.point, &oracle) < 1e-5, "{} y={:?} got={:?} want={:?}", inst.name, y, got.point, oracle);
    }

    #[test]
    fn trajectory_invariants(seed in any::<u64>(), entropy in any::<bool>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 6);
        let map = if entropy { MirrorMap::Entropy } else { MirrorMap::Euclidean };
        let y = random_target(&mut r, inst.m(), map);
        let res = inc_fix(&inst.oracle, map, &y).unwrap();
        prop_assert!(in_base_polytope(&inst, &res.point, 1e-9));
        prop_assert!(verify_first_order(&inst.oracle, map, &y, &res.point).unwrap().optimal);
        prop_assert!(res.levels.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(res.outer_iterations() <= inst.m());
        for pair in res.steps.windows(2) {
            prop_assert!(pair[0].point.iter().zip(&pair[1].point).all(|(a, b)| *a <= *b + 1e-12));
            prop_assert!(pair[1].epsilon >= 0.0);
        }
        // The blocks partition the ground set.
        let mut seen: Vec<usize> = res.blocks.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..inst.m()).collect::<Vec<_>>());
    }

    #[test]
    fn rational_projection_is_exactly_optimal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=5);
        let k = r.gen_range(1..=m);
        let f = ExactOracle::uniform(m, k).unwrap();
        let y: Vec<Rational> = (0..m).map(|_| ratio(r.gen_range(-20..40), r.gen_range(1..12))).collect();
        let x = project_euclidean(&f, &y).unwrap().point;
        prop_assert!(f.is_member_exhaustive(&x, true).unwrap());
        // Prefixes of the gradient level sets x - y are tight, exactly.
        let g: Vec<Rational> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| g[a].cmp(&g[b]));
        let mut mass = ratio(0, 1);
        for (i, &e) in order.iter().enumerate() {
            mass += &x[e];
            if i + 1 == m || g[order[i + 1]] != g[e] {
                prop_assert_eq!(mass.clone(), ratio((i + 1).min(k) as i64, 1));
            }
        }
    }
}
