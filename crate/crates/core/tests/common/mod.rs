//! Instance generators and brute-force oracles shared by the integration tests.
//! Nothing here calls back into the library's algorithms; oracles are built
//! from set enumeration and closed forms.
#![allow(dead_code)]

use mspgame::game::{Game, LossMatrix, StrategyPolytope};
use mspgame::mwu::MwuRun;
use mspgame::{Graph, Oracle};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An oracle together with an independently computed value table.
pub struct Instance {
    pub oracle: Oracle,
    pub table: Vec<f64>,
    pub name: String,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.oracle.m()
    }

    pub fn f(&self, mask: u64) -> f64 {
        self.table[mask as usize]
    }

    pub fn full(&self) -> u64 {
        (1u64 << self.m()) - 1
    }
}

pub fn popcount(mask: u64) -> usize {
    mask.count_ones() as usize
}

pub fn mask_sum(x: &[f64], mask: u64) -> f64 {
    (0..x.len()).filter(|&e| mask >> e & 1 == 1).map(|e| x[e]).sum()
}

/// Rank of an edge subset by union-find, written out here rather than taken
/// from the library.
pub fn graph_rank(n: usize, edges: &[(usize, usize)], mask: u64) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            a = p[a];
        }
        a
    }
    let mut rank = 0;
    for (e, &(u, v)) in edges.iter().enumerate() {
        if mask >> e & 1 == 0 {
            continue;
        }
        let (a, b) = (root(&mut parent, u), root(&mut parent, v));
        if a != b {
            parent[a] = b;
            rank += 1;
        }
    }
    rank
}

pub fn uniform(m: usize, k: usize) -> Instance {
    let table = (0..1u64 << m).map(|s| popcount(s).min(k) as f64).collect();
    Instance { oracle: Oracle::uniform(m, k).unwrap(), table, name: format!("U({k},{m})") }
}

pub fn cardinality(g: Vec<f64>) -> Instance {
    let m = g.len() - 1;
    let table = (0..1u64 << m).map(|s| g[popcount(s)]).collect();
    Instance { oracle: Oracle::cardinality(g.clone()).unwrap(), table, name: format!("card{g:?}") }
}

pub fn graphic(n: usize, edges: Vec<(usize, usize)>) -> Instance {
    let m = edges.len();
    let table = (0..1u64 << m).map(|s| graph_rank(n, &edges, s) as f64).collect();
    let name = format!("graph{edges:?}");
    Instance { oracle: Oracle::graphic(Graph::new(n, edges).unwrap()).unwrap(), table, name }
}

/// Connected loopless multigraph: a random spanning tree plus extra edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((order[j].min(order[i]), order[j].max(order[i])));
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let mut v = rng.gen_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        edges.push((u.min(v), u.max(v)));
    }
    edges.shuffle(rng);
    edges
}

/// Concave nondecreasing `g` with `g(0) = 0` and positive increments.
pub fn random_concave(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut inc: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..2.0)).collect();
    inc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut g = vec![0.0];
    for d in inc {
        g.push(g.last().unwrap() + d);
    }
    g
}

/// Uniform, cardinality or graphic instance on at most `max_m` elements.
pub fn random_instance(rng: &mut ChaCha8Rng, max_m: usize) -> Instance {
    match rng.gen_range(0..3) {
        0 => {
            let m = rng.gen_range(2..=max_m);
            uniform(m, rng.gen_range(1..=m))
        }
        1 => {
            let m = rng.gen_range(2..=max_m);
            cardinality(random_concave(rng, m))
        }
        _ => loop {
            let n = rng.gen_range(2..=5);
            if n - 1 > max_m {
                continue;
            }
            let extra = rng.gen_range(0..=(max_m - (n - 1)).min(4));
            let edges = random_graph(rng, n, extra);
            if edges.len() >= 2 {
                return graphic(n, edges);
            }
        },
    }
}

/// Random matroid (uniform or graphic) on at most `max_m` elements.
pub fn random_matroid(rng: &mut ChaCha8Rng, max_m: usize) -> Instance {
    if rng.gen_bool(0.35) {
        let m = rng.gen_range(2..=max_m);
        uniform(m, rng.gen_range(1..=m))
    } else {
        let n = rng.gen_range(2..=6.min(max_m + 1));
        let extra = rng.gen_range(0..=max_m - (n - 1));
        graphic(n, random_graph(rng, n, extra))
    }
}

/// Greedy base for a random order, from the value table.
pub fn random_vertex(inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut order: Vec<usize> = (0..inst.m()).collect();
    order.shuffle(rng);
    let mut x = vec![0.0; inst.m()];
    let mut mask = 0u64;
    for e in order {
        let prev = inst.f(mask);
        mask |= 1 << e;
        x[e] = inst.f(mask) - prev;
    }
    x
}

/// Random point of `B(f)` as a convex combination of a few random vertices.
pub fn random_base_point(inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(1..=4);
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut x = vec![0.0; inst.m()];
    for wi in w {
        let v = random_vertex(inst, rng);
        for (a, b) in x.iter_mut().zip(v) {
            *a += wi / total * b;
        }
    }
    x
}

/// `max x(S) - f(S)` over nonempty `S`; at most zero iff `x ∈ P(f)`.
pub fn max_violation(inst: &Instance, x: &[f64]) -> f64 {
    (1..=inst.full()).map(|s| mask_sum(x, s) - inst.f(s)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn in_base_polytope(inst: &Instance, x: &[f64], tol: f64) -> bool {
    x.iter().all(|&v| v >= -tol) && max_violation(inst, x) <= tol && (mask_sum(x, inst.full()) - inst.f(inst.full())).abs() <= tol
}

/// `max δ` with `x + δd ∈ P(f)`: the smallest ratio over sets gaining mass.
pub fn brute_line_search(inst: &Instance, x: &[f64], d: &[f64]) -> f64 {
    (1..=inst.full())
        .filter(|&s| mask_sum(d, s) > 0.0)
        .map(|s| (inst.f(s) - mask_sum(x, s)) / mask_sum(d, s))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Divergence {
    Euclidean,
    Entropy,
}

/// Minimizer of a separable divergence to `y` over `B(f)` by the
/// decomposition algorithm: solve on the hyperplane `x(E) = f(E)`, split at
/// the maximal most-violated set, recurse on restriction and contraction.
/// Set minimization is by enumeration.
pub fn decomposition_projection(inst: &Instance, y: &[f64], div: Divergence) -> Vec<f64> {
    let mut x = vec![0.0; inst.m()];
    solve_block(inst, y, div, inst.full(), 0, &mut x);
    x
}

/// Solves on the elements of `ground` for `h(A) = f(A ∪ base) - f(base)`.
fn solve_block(inst: &Instance, y: &[f64], div: Divergence, ground: u64, base: u64, x: &mut [f64]) {
    if ground == 0 {
        return;
    }
    let h = |a: u64| inst.f(a | base) - inst.f(base);
    let elems: Vec<usize> = (0..inst.m()).filter(|&e| ground >> e & 1 == 1).collect();
    let target = h(ground);
    let mut z = vec![0.0; inst.m()];
    match div {
        Divergence::Euclidean => {
            let shift = (target - elems.iter().map(|&e| y[e]).sum::<f64>()) / elems.len() as f64;
            for &e in &elems {
                z[e] = y[e] + shift;
            }
        }
        Divergence::Entropy => {
            let scale = target / elems.iter().map(|&e| y[e]).sum::<f64>();
            for &e in &elems {
                z[e] = y[e] * scale;
            }
        }
    }
    // Maximal maximizer of z(A) - h(A) over subsets of `ground`.
    let mut best = 0.0;
    let mut best_set = 0u64;
    let mut sub = ground;
    loop {
        if sub != 0 && sub != ground {
            let v = mask_sum(&z, sub) - h(sub);
            if v > best + 1e-12 {
                best = v;
                best_set = sub;
            } else if (v - best).abs() <= 1e-12 && best > 1e-12 {
                best_set |= sub;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & ground;
    }
    if best <= 1e-12 {
        for &e in &elems {
            x[e] = z[e];
        }
        return;
    }
    solve_block(inst, y, div, best_set, base, x);
    solve_block(inst, y, div, ground & !best_set, base | best_set, x);
}

/// Spanning trees of a multigraph as edge masks, by enumeration.
pub fn spanning_trees(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let m = edges.len();
    (0..1u64 << m)
        .filter(|&s| popcount(s) == n - 1 && graph_rank(n, edges, s) == n - 1)
        .collect()
}

/// `Z(λ)` and marginals of the product distribution over `vertices`.
pub fn product_marginals(vertices: &[u64], lambda: &[f64]) -> (f64, Vec<f64>) {
    let mut z = 0.0;
    let mut marg = vec![0.0; lambda.len()];
    for &v in vertices {
        let w: f64 = (0..lambda.len()).filter(|&e| v >> e & 1 == 1).map(|e| lambda[e]).product();
        z += w;
        for (e, mg) in marg.iter_mut().enumerate() {
            if v >> e & 1 == 1 {
                *mg += w;
            }
        }
    }
    (z, marg.into_iter().map(|v| v / z).collect())
}

pub fn self_game(oracle: &Oracle, loss: LossMatrix<f64>) -> Game<f64> {
    Game::new(StrategyPolytope::Polymatroid(oracle.clone()), StrategyPolytope::Polymatroid(oracle.clone()), loss).unwrap()
}

pub fn k4_edges() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
}

/// Row-minimizer's value of a matrix game by a closed form for 2×2 and
/// pure saddle points; `None` otherwise.
pub fn small_game_value(a: &[Vec<f64>]) -> Option<f64> {
    let lower = a.iter().map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).fold(f64::INFINITY, f64::min);
    let upper = (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max);
    if (lower - upper).abs() < 1e-12 {
        return Some(lower);
    }
    if a.len() == 2 && a[0].len() == 2 {
        let (p, q, r, s) = (a[0][0], a[0][1], a[1][0], a[1][1]);
        return Some((p * s - q * r) / (p + s - q - r));
    }
    None
}

/// Contracts edge `e`: its endpoints merge, parallel edges become loops.
pub fn contract(n: usize, edges: &[(usize, usize)], e: usize) -> (usize, Vec<(usize, usize)>) {
    let (keep, gone) = edges[e];
    let relabel = |v: usize| {
        let v = if v == gone { keep } else { v };
        if v > gone {
            v - 1
        } else {
            v
        }
    };
    let out = edges
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != e)
        .map(|(_, &(a, b))| {
            let (a, b) = (relabel(a), relabel(b));
            (a.min(b), a.max(b))
        })
        .collect();
    (n - 1, out)
}

/// Bases of the instance, from the value table: independent sets of full rank.
pub fn bases(inst: &Instance) -> Vec<u64> {
    let r = inst.f(inst.full());
    (0..=inst.full())
        .filter(|&s| popcount(s) as f64 == r && inst.f(s) == r)
        .collect()
}

/// Spread of base costs under `Lx`: zero exactly for symmetric equilibria.
pub fn base_cost_spread(inst: &Instance, loss: &LossMatrix<f64>, x: &[f64]) -> f64 {
    let lx = loss.apply(x);
    let costs: Vec<f64> = bases(inst).iter().map(|&b| mask_sum(&lx, b)).collect();
    costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - costs.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn random_symmetric(r: &mut ChaCha8Rng, m: usize) -> LossMatrix<f64> {
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = r.gen_range(0.0..2.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    LossMatrix::new(a).unwrap()
}

pub fn masks_to_rows(vertices: &[u64], m: usize) -> Vec<Vec<bool>> {
    vertices.iter().map(|&v| (0..m).map(|e| v >> e & 1 == 1).collect()).collect()
}

/// Replays a traced run with explicit weights over every vertex.
pub fn replay_explicit(run: &MwuRun, vertices: &[u64], loss: &LossMatrix<f64>) -> f64 {
    let m = loss.n_rows();
    let mut w = vec![1.0; vertices.len()];
    let mut worst = 0.0f64;
    for round in &run.trace {
        let z: f64 = w.iter().sum();
        for e in 0..m {
            let p: f64 = vertices.iter().zip(&w).filter(|(&u, _)| u >> e & 1 == 1).map(|(_, &wu)| wu).sum::<f64>() / z;
            worst = worst.max((p - round.x[e]).abs());
        }
        let lv = loss.apply(&round.v);
        for (u, wu) in vertices.iter().zip(w.iter_mut()) {
            let cost: f64 = (0..m).filter(|&e| u >> e & 1 == 1).map(|e| lv[e]).sum();
            *wu *= run.beta.powf(cost / run.scale);
        }
        let total: f64 = w.iter().sum();
        for wu in w.iter_mut() {
            *wu /= total;
        }
    }
    worst
}
