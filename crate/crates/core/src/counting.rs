//! Generalized counting oracles for product distributions over 0/1 vertices.
//!
//! A multiplier vector `λ > 0` defines `p(u) ∝ Π_{e ∈ u} λ_e`. The oracles
//! return the partition function `Z(λ)`, the marginals `x_e = P[e ∈ u]`, and
//! exact samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::{Graph, UnionFind};
use crate::linalg::{determinant, maximize, LpOutcome};
use crate::scalar::{Real, Scalar};
use crate::submodular::for_each_combination;

/// Largest vertex list materialized by [`CountingOracle::vertices`].
pub const VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountingOracle {
    /// Spanning trees of a multigraph, counted by Kirchhoff's theorem.
    MatrixTree { graph: Graph },
    /// All `k`-subsets of `0..m`.
    KSubsets { m: usize, k: usize },
    /// An explicit list of 0/1 vertices.
    Enumeration { m: usize, vertices: Vec<Vec<bool>> },
}

impl CountingOracle {
    pub fn matrix_tree(graph: Graph) -> Self {
        CountingOracle::MatrixTree { graph }
    }

    pub fn k_subsets(m: usize, k: usize) -> Self {
        CountingOracle::KSubsets { m, k }
    }

    pub fn enumeration(m: usize, vertices: Vec<Vec<bool>>) -> Result<Self> {
        for v in &vertices {
            check_len(m, v.len())?;
        }
        Ok(CountingOracle::Enumeration { m, vertices })
    }

    /// Number of ground elements.
    pub fn m(&self) -> usize {
        match self {
            CountingOracle::MatrixTree { graph } => graph.num_edges(),
            CountingOracle::KSubsets { m, .. } | CountingOracle::Enumeration { m, .. } => *m,
        }
    }

    /// `Z(λ) = Σ_u Π_{e ∈ u} λ_e`.
    pub fn partition_function<S: Scalar>(&self, lambda: &[S]) -> Result<S> {
        self.check_multipliers(lambda)?;
        Ok(match self {
            CountingOracle::MatrixTree { graph } => tree_count(graph.num_vertices(), graph.edges(), lambda),
            CountingOracle::KSubsets { k, .. } => elementary_symmetric(lambda, *k).pop().expect("k+1 entries"),
            CountingOracle::Enumeration { vertices, .. } => {
                vertices.iter().fold(S::zero(), |acc, u| acc + vertex_weight(u, lambda))
            }
        })
    }

    /// `x_e = Z_e(λ) / Z(λ)` where `Z_e` sums over vertices containing `e`.
    pub fn marginals<S: Scalar>(&self, lambda: &[S]) -> Result<Vec<S>> {
        let z = self.partition_function(lambda)?;
        if z.is_zero() {
            return Err(Error::NoBases);
        }
        let m = self.m();
        Ok(match self {
            CountingOracle::MatrixTree { graph } => {
                (0..m).map(|e| tree_marginal(graph.num_vertices(), graph.edges(), lambda, e, &z)).collect()
            }
            CountingOracle::KSubsets { k: 0, .. } => vec![S::zero(); m],
            CountingOracle::KSubsets { k, .. } => (0..m)
                .map(|e| {
                    let rest: Vec<S> = (0..m).filter(|&i| i != e).map(|i| lambda[i].clone()).collect();
                    let without = elementary_symmetric(&rest, k - 1).pop().expect("k entries");
                    lambda[e].clone() * without / z.clone()
                })
                .collect(),
            CountingOracle::Enumeration { vertices, .. } => {
                let mut acc = vec![S::zero(); m];
                for u in vertices {
                    let w = vertex_weight(u, lambda);
                    for (e, &inside) in u.iter().enumerate() {
                        if inside {
                            acc[e] = acc[e].clone() + w.clone();
                        }
                    }
                }
                acc.into_iter().map(|v| v / z.clone()).collect()
            }
        })
    }

    /// `ln |U|`, i.e. `ln Z(1)`.
    pub fn log_count(&self) -> Result<f64> {
        let z: f64 = self.partition_function(&vec![1.0; self.m()])?;
        if z <= 0.0 {
            return Err(Error::NoBases);
        }
        Ok(z.ln())
    }

    /// Draws one vertex from `p(u) ∝ Π λ_e` with a seeded stream.
    pub fn sample<S: Scalar>(&self, lambda: &[S], seed: u64) -> Result<Vec<bool>> {
        self.sample_with(lambda, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Self-reducible sampler: elements are visited in a random order and each
    /// is kept with its conditional marginal in the current sub-instance
    /// (contract on inclusion, delete on exclusion).
    pub fn sample_with<S: Scalar, R: Rng + ?Sized>(&self, lambda: &[S], rng: &mut R) -> Result<Vec<bool>> {
        let z = self.partition_function(lambda)?;
        if z.is_zero() {
            return Err(Error::NoBases);
        }
        let m = self.m();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let mut chosen = vec![false; m];
        let mut decided = vec![false; m];
        for &e in &order {
            let p = self.conditional(lambda, &chosen, &decided, e)?;
            chosen[e] = rng.gen::<f64>() < p.to_f64_lossy();
            decided[e] = true;
        }
        Ok(chosen)
    }

    /// `P[e ∈ u | decisions so far]`.
    fn conditional<S: Scalar>(&self, lambda: &[S], chosen: &[bool], decided: &[bool], e: usize) -> Result<S> {
        match self {
            CountingOracle::MatrixTree { graph } => {
                // Contract chosen edges; drop excluded ones.
                let mut uf = UnionFind::new(graph.num_vertices());
                for (i, &(u, v)) in graph.edges().iter().enumerate() {
                    if chosen[i] {
                        uf.union(u, v);
                    }
                }
                let (n, relabel) = compress(&mut uf, graph.num_vertices());
                let mut edges = Vec::new();
                let mut weights = Vec::new();
                let mut target = None;
                for (i, &(u, v)) in graph.edges().iter().enumerate() {
                    if decided[i] {
                        continue;
                    }
                    if i == e {
                        target = Some(edges.len());
                    }
                    edges.push((relabel[uf.find(u)], relabel[uf.find(v)]));
                    weights.push(lambda[i].clone());
                }
                let z = tree_count(n, &edges, &weights);
                if z.is_zero() {
                    return Err(Error::Internal("sampler reached an empty sub-instance".into()));
                }
                Ok(tree_marginal(n, &edges, &weights, target.expect("undecided edge"), &z))
            }
            CountingOracle::KSubsets { k, .. } => {
                let taken = chosen.iter().filter(|&&c| c).count();
                let need = k - taken;
                if need == 0 {
                    return Ok(S::zero());
                }
                let rest: Vec<S> =
                    (0..lambda.len()).filter(|&i| !decided[i] && i != e).map(|i| lambda[i].clone()).collect();
                let with = lambda[e].clone() * elementary_symmetric(&rest, need - 1).pop().expect("entries");
                let without = elementary_symmetric(&rest, need).pop().expect("entries");
                Ok(with.clone() / (with + without))
            }
            CountingOracle::Enumeration { vertices, .. } => {
                let mut with = S::zero();
                let mut total = S::zero();
                for u in vertices {
                    if (0..u.len()).any(|i| decided[i] && u[i] != chosen[i]) {
                        continue;
                    }
                    let w = vertex_weight(u, lambda);
                    if u[e] {
                        with = with + w.clone();
                    }
                    total = total + w;
                }
                if total.is_zero() {
                    return Err(Error::Internal("sampler reached an empty sub-instance".into()));
                }
                Ok(with / total)
            }
        }
    }

    /// All vertices as indicator vectors, in lexicographic order of their
    /// sorted element lists.
    pub fn vertices(&self) -> Result<Vec<Vec<bool>>> {
        let m = self.m();
        let mut out = Vec::new();
        let mut overflow = false;
        let mut push = |combo: &[usize], out: &mut Vec<Vec<bool>>| {
            if out.len() >= VERTEX_CAP {
                overflow = true;
                return;
            }
            let mut u = vec![false; m];
            for &e in combo {
                u[e] = true;
            }
            out.push(u);
        };
        match self {
            CountingOracle::MatrixTree { graph } => {
                let n = graph.num_vertices();
                if !graph.is_connected() {
                    return Err(Error::NoBases);
                }
                let r = n.saturating_sub(1);
                for_each_combination(m, r, |combo| {
                    if graph.rank_of(combo.iter().copied()) == r {
                        push(combo, &mut out);
                    }
                });
            }
            CountingOracle::KSubsets { k, .. } => for_each_combination(m, *k, |combo| push(combo, &mut out)),
            CountingOracle::Enumeration { vertices, .. } => return Ok(vertices.clone()),
        }
        if overflow {
            return Err(Error::Capacity { what: "vertex enumeration".into(), size: VERTEX_CAP + 1, cap: VERTEX_CAP });
        }
        Ok(out)
    }

    fn check_multipliers<S: Scalar>(&self, lambda: &[S]) -> Result<()> {
        check_len(self.m(), lambda.len())?;
        if let Some(e) = lambda.iter().position(|v| !(*v > S::zero()) || !v.to_f64_lossy().is_finite()) {
            return Err(Error::Domain(format!("multiplier {e} must be positive and finite")));
        }
        Ok(())
    }
}

/// Marginal oracle with bounded additive noise: each marginal is perturbed by
/// a uniform draw from `[-eps1, eps1]` and clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOracle {
    pub exact: CountingOracle,
    pub eps1: f64,
}

impl NoisyOracle {
    pub fn new(exact: CountingOracle, eps1: f64) -> Result<Self> {
        if !(eps1 >= 0.0 && eps1.is_finite()) {
            return Err(Error::Config(format!("marginal noise must be a nonnegative number, got {eps1}")));
        }
        Ok(Self { exact, eps1 })
    }

    pub fn marginals<T: Real, R: Rng + ?Sized>(&self, lambda: &[T], rng: &mut R) -> Result<Vec<T>> {
        let exact = self.exact.marginals(lambda)?;
        if self.eps1 == 0.0 {
            return Ok(exact);
        }
        Ok(exact
            .into_iter()
            .map(|x| {
                let noise = T::lit(rng.gen_range(-self.eps1..=self.eps1));
                (x + noise).max(T::zero()).min(T::one())
            })
            .collect())
    }
}

/// Writes `x` as a convex combination of at most `m + 1` of the given
/// vertices. A basic solution of the feasibility LP supplies the support;
/// when `x` lies outside the hull the LP's Farkas vector is returned as a
/// separating direction `a` with `a·x > max_u a·u`.
pub fn caratheodory_decompose<S: Scalar>(vertices: &[Vec<bool>], x: &[S]) -> Result<Vec<(Vec<bool>, S)>> {
    let m = x.len();
    if vertices.is_empty() {
        return Err(Error::NoBases);
    }
    for v in vertices {
        check_len(m, v.len())?;
    }
    let n = vertices.len();
    let indicator = |b: bool| if b { S::one() } else { S::zero() };
    let mut a: Vec<Vec<S>> = (0..m).map(|e| vertices.iter().map(|u| indicator(u[e])).collect()).collect();
    a.push(vec![S::one(); n]);
    let mut b = x.to_vec();
    b.push(S::one());
    match maximize(&vec![S::zero(); n], &a, &b) {
        LpOutcome::Optimal { x: weights, .. } => {
            let tol = S::feas_tol();
            Ok(vertices
                .iter()
                .zip(weights)
                .filter(|(_, w)| *w > tol)
                .map(|(u, w)| (u.clone(), w))
                .collect())
        }
        LpOutcome::Infeasible { farkas } => Err(Error::Infeasible {
            message: "point lies outside the convex hull of the vertices".into(),
            separator: farkas[..m].iter().map(|y| -y.to_f64_lossy()).collect(),
        }),
        LpOutcome::Unbounded => Err(Error::Internal("feasibility LP reported unbounded".into())),
    }
}

fn vertex_weight<S: Scalar>(u: &[bool], lambda: &[S]) -> S {
    u.iter().zip(lambda).filter(|(&b, _)| b).fold(S::one(), |acc, (_, l)| acc * l.clone())
}

/// `e_0(λ), …, e_k(λ)` by the one-element-at-a-time recurrence.
pub fn elementary_symmetric<S: Scalar>(lambda: &[S], k: usize) -> Vec<S> {
    let mut e = vec![S::zero(); k + 1];
    e[0] = S::one();
    for (i, l) in lambda.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] = e[j].clone() + l.clone() * e[j - 1].clone();
        }
    }
    e
}

/// Weighted spanning-tree count: the determinant of the Laplacian with the
/// last row and column removed. Loops contribute nothing.
fn tree_count<S: Scalar>(n: usize, edges: &[(usize, usize)], lambda: &[S]) -> S {
    if n <= 1 {
        return S::one();
    }
    let mut uf = UnionFind::new(n);
    let mut joined = 0;
    for &(u, v) in edges {
        if uf.union(u, v) {
            joined += 1;
        }
    }
    if joined < n - 1 {
        return S::zero();
    }
    let k = n - 1;
    let mut lap = vec![vec![S::zero(); k]; k];
    for (&(u, v), l) in edges.iter().zip(lambda) {
        if u == v {
            continue;
        }
        if u < k {
            lap[u][u] = lap[u][u].clone() + l.clone();
        }
        if v < k {
            lap[v][v] = lap[v][v].clone() + l.clone();
        }
        if u < k && v < k {
            lap[u][v] = lap[u][v].clone() - l.clone();
            lap[v][u] = lap[v][u].clone() - l.clone();
        }
    }
    determinant(lap)
}

/// `λ_e Z(G/e) / Z(G)`; contraction turns edges parallel to `e` into loops.
fn tree_marginal<S: Scalar>(n: usize, edges: &[(usize, usize)], lambda: &[S], e: usize, z: &S) -> S {
    let (a, b) = edges[e];
    if a == b {
        return S::zero();
    }
    let merge = |w: usize| {
        let w = if w == b { a } else { w };
        if w > b {
            w - 1
        } else {
            w
        }
    };
    let mut contracted = Vec::with_capacity(edges.len() - 1);
    let mut weights = Vec::with_capacity(edges.len() - 1);
    for (i, &(u, v)) in edges.iter().enumerate() {
        if i != e {
            contracted.push((merge(u), merge(v)));
            weights.push(lambda[i].clone());
        }
    }
    lambda[e].clone() * tree_count(n - 1, &contracted, &weights) / z.clone()
}

/// Relabels union-find roots to `0..count`.
fn compress(uf: &mut UnionFind, n: usize) -> (usize, Vec<usize>) {
    let mut relabel = vec![usize::MAX; n];
    let mut count = 0;
    for v in 0..n {
        let r = uf.find(v);
        if relabel[r] == usize::MAX {
            relabel[r] = count;
            count += 1;
        }
    }
    (count, relabel)
}
