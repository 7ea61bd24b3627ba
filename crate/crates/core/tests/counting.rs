mod common;

use std::collections::HashMap;

use common::*;
use mspgame::counting::{caratheodory_decompose, elementary_symmetric, CountingOracle};
use mspgame::{ratio, Error, Graph, Rational};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_lambda(r: &mut rand_chacha::ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(0.2..3.0)).collect()
}

fn without(v: &[f64], e: usize) -> Vec<f64> {
    v.iter().enumerate().filter(|&(i, _)| i != e).map(|(_, &x)| x).collect()
}

#[test]
fn k4_counts() {
    let k4 = CountingOracle::matrix_tree(Graph::complete(4));
    assert_eq!(k4.partition_function(&[1.0; 6]).unwrap(), 16.0);
    assert!((k4.log_count().unwrap() - 16f64.ln()).abs() < 1e-12);
    let exact = CountingOracle::matrix_tree(Graph::complete(4));
    let one = Rational::from_integer(1.into());
    assert_eq!(exact.partition_function(&vec![one; 6]).unwrap(), ratio(16, 1));
    assert!(k4.marginals(&[1.0f64; 6]).unwrap().iter().all(|&x| (x - 0.5).abs() < 1e-12));
}

#[test]
fn k_subsets_match_binomials() {
    let u = CountingOracle::k_subsets(6, 3);
    assert_eq!(u.partition_function(&[1.0; 6]).unwrap(), 20.0);
    let e = elementary_symmetric(&[1.0, 2.0, 3.0], 3);
    assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
}

#[test]
fn disconnected_graph_has_no_trees() {
    let g = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
    let c = CountingOracle::matrix_tree(g);
    assert_eq!(c.partition_function(&[1.0, 1.0]).unwrap(), 0.0);
    assert!(matches!(c.marginals(&[1.0, 1.0]), Err(Error::NoBases)));
}

#[test]
fn sampler_fits_tree_distribution() {
    let oracle = CountingOracle::matrix_tree(Graph::complete(4));
    let lambda = [0.5, 1.0, 2.0, 1.0, 3.0, 0.7];
    let trees = spanning_trees(4, &k4_edges());
    let z: f64 = trees.iter().map(|&t| weight(t, &lambda)).sum();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    let mut r = rng(3);
    let n = 4000;
    for _ in 0..n {
        let s = oracle.sample_with(&lambda, &mut r).unwrap();
        let mask = s.iter().enumerate().filter(|(_, &b)| b).fold(0u64, |a, (e, _)| a | 1 << e);
        *counts.entry(mask).or_default() += 1;
    }
    assert!(counts.keys().all(|k| trees.contains(k)));
    let stat: f64 = trees
        .iter()
        .map(|&t| {
            let expected = n as f64 * weight(t, &lambda) / z;
            let got = *counts.get(&t).unwrap_or(&0) as f64;
            (got - expected).powi(2) / expected
        })
        .sum();
    let p = 1.0 - ChiSquared::new((trees.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square p = {p}");
}

fn weight(mask: u64, lambda: &[f64]) -> f64 {
    (0..lambda.len()).filter(|&e| mask >> e & 1 == 1).map(|e| lambda[e]).product()
}

#[test]
fn caratheodory_on_k4_center() {
    let oracle = CountingOracle::matrix_tree(Graph::complete(4));
    let verts = oracle.vertices().unwrap();
    let x = vec![ratio(1, 2); 6];
    let parts = caratheodory_decompose(&verts, &x).unwrap();
    assert!(parts.len() <= 7);
    let total: Rational = parts.iter().map(|(_, w)| w.clone()).sum();
    assert_eq!(total, ratio(1, 1));
    for e in 0..6 {
        let mass: Rational = parts.iter().filter(|(u, _)| u[e]).map(|(_, w)| w.clone()).sum();
        assert_eq!(mass, ratio(1, 2));
    }
}

#[test]
fn caratheodory_separates_outside_points() {
    let oracle = CountingOracle::k_subsets(3, 1);
    let verts = oracle.vertices().unwrap();
    let x = [0.5, 0.5, 0.5];
    match caratheodory_decompose(&verts, &x) {
        Err(Error::Infeasible { separator, .. }) => {
            let ax: f64 = separator.iter().zip(&x).map(|(a, b)| a * b).sum();
            let best = verts
                .iter()
                .map(|u| separator.iter().zip(u).filter(|(_, &b)| b).map(|(a, _)| a).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(ax > best + 1e-9);
        }
        other => panic!("expected a separator, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrix_tree_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let extra = r.gen_range(0..=5);
        let edges = random_graph(&mut r, n, extra);
        let lambda = random_lambda(&mut r, edges.len());
        let oracle = CountingOracle::matrix_tree(Graph::new(n, edges.clone()).unwrap());
        let trees = spanning_trees(n, &edges);
        let (z, marg) = product_marginals(&trees, &lambda);
        prop_assert!(rel(oracle.partition_function(&lambda).unwrap(), z) < 1e-9);
        let got = oracle.marginals(&lambda).unwrap();
        for (a, b) in got.iter().zip(&marg) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn deletion_contraction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(3..=6);
        let extra = r.gen_range(0..=4);
        let edges = random_graph(&mut r, n, extra);
        let lambda = random_lambda(&mut r, edges.len());
        let z = CountingOracle::matrix_tree(Graph::new(n, edges.clone()).unwrap()).partition_function(&lambda).unwrap();
        for e in 0..edges.len() {
            let del: Vec<_> = edges.iter().enumerate().filter(|&(i, _)| i != e).map(|(_, &p)| p).collect();
            let z_del = CountingOracle::matrix_tree(Graph::new(n, del).unwrap()).partition_function(&without(&lambda, e)).unwrap();
            let (nc, con) = contract(n, &edges, e);
            let z_con = CountingOracle::matrix_tree(Graph::new(nc, con).unwrap()).partition_function(&without(&lambda, e)).unwrap();
            prop_assert!(rel(z, z_del + lambda[e] * z_con) < 1e-9);
        }
    }

    #[test]
    fn k_subsets_match_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(1..=8);
        let k = r.gen_range(0..=m);
        let lambda = random_lambda(&mut r, m);
        let verts: Vec<u64> = (0..1u64 << m).filter(|&s| popcount(s) == k).collect();
        let (z, marg) = product_marginals(&verts, &lambda);
        let oracle = CountingOracle::k_subsets(m, k);
        prop_assert!(rel(oracle.partition_function(&lambda).unwrap(), z) < 1e-9);
        let got = oracle.marginals(&lambda).unwrap();
        for (a, b) in got.iter().zip(&marg) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((got.iter().sum::<f64>() - k as f64).abs() < 1e-9);
    }

    #[test]
    fn marginals_are_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let edges = random_graph(&mut r, n, 3);
        let lambda = random_lambda(&mut r, edges.len());
        let scaled: Vec<f64> = lambda.iter().map(|v| v * c).collect();
        let oracle = CountingOracle::matrix_tree(Graph::new(n, edges).unwrap());
        let a = oracle.marginals(&lambda).unwrap();
        let b = oracle.marginals(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn caratheodory_reconstructs_marginals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let edges = random_graph(&mut r, n, 2);
        let lambda = random_lambda(&mut r, edges.len());
        let oracle = CountingOracle::matrix_tree(Graph::new(n, edges.clone()).unwrap());
        let x = oracle.marginals(&lambda).unwrap();
        let verts = oracle.vertices().unwrap();
        let parts = caratheodory_decompose(&verts, &x).unwrap();
        prop_assert!(parts.len() <= edges.len() + 1);
        for e in 0..edges.len() {
            let mass: f64 = parts.iter().filter(|(u, _)| u[e]).map(|(_, w)| w).sum();
            prop_assert!((mass - x[e]).abs() < 1e-9);
        }
    }
}
