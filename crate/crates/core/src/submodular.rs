//! Normalized monotone submodular functions and their polymatroids.
//!
//! For `f: 2^E -> R` the independence polytope is
//! `P(f) = {x >= 0 : x(U) <= f(U) for all U}` and the base polytope `B(f)` adds
//! `x(E) = f(E)`. Every routine below works through the value oracle, with
//! structured fast paths for the shipped kinds and exhaustive enumeration
//! (up to [`ENUMERATION_CAP`] elements) as the general fallback.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::{Graph, UnionFind};
use crate::scalar::{sum, Scalar};

/// Largest ground set (or vertex set, for graphic oracles) enumerated exhaustively.
pub const ENUMERATION_CAP: usize = 20;

/// Largest ground set on which the axioms are verified exhaustively.
pub const AXIOM_CHECK_CAP: usize = 12;

/// Vertex count up to which graphic `min_excess` runs the exact subset DP.
pub const GRAPHIC_DP_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    labels: Vec<String>,
}

impl GroundSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("ground set must be nonempty".into()));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("duplicate label {:?}", w[0])));
        }
        Ok(Self { labels })
    }

    /// Ground set labelled `e0, e1, ...`.
    pub fn indexed(m: usize) -> Self {
        Self { labels: (0..m).map(|i| format!("e{i}")).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind<S> {
    /// `f(S) = min(|S|, k)`.
    Uniform { k: usize },
    /// `f(S) = g(|S|)` for a concave nondecreasing `g` with `g(0) = 0`.
    Cardinality { g: Vec<S> },
    /// Rank function of the cycle matroid of a loopless multigraph.
    Graphic { graph: Graph },
    /// `f(S) = sum_i min(|S ∩ B_i|, c_i)`.
    Partition { blocks: Vec<Vec<usize>>, capacities: Vec<usize> },
    /// Value table indexed by subset bitmask.
    Explicit { values: Vec<S> },
}

/// Result of minimizing `f(A) - w(A)` over subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Excess<S> {
    pub value: S,
    pub set: Vec<bool>,
}

/// How a line search was answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineRoute {
    /// Single pass over a sorted order (cardinality-based functions).
    Ordered,
    /// Discrete Newton iterations over a submodular minimizer.
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch<S> {
    pub step: S,
    pub route: LineRoute,
    pub newton_steps: usize,
}

/// Value oracle for a normalized monotone submodular function.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularOracle<S> {
    ground: GroundSet,
    kind: OracleKind<S>,
    block_of: Vec<usize>,
}

impl<S: Scalar> SubmodularOracle<S> {
    pub fn uniform(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Domain(format!("uniform matroid needs m >= 1 and k >= 1 (m={m}, k={k})")));
        }
        Ok(Self::raw(GroundSet::indexed(m), OracleKind::Uniform { k }))
    }

    pub fn cardinality(g: Vec<S>) -> Result<Self> {
        if g.len() < 2 {
            return Err(Error::Domain("cardinality oracle needs g(0..m) with m >= 1".into()));
        }
        if !g[0].near(&S::zero(), &S::feas_tol()) {
            return Err(Error::Domain("g(0) must be 0".into()));
        }
        let tol = S::feas_tol();
        for i in 1..g.len() {
            if g[i] <= S::zero() {
                return Err(Error::Domain(format!("g({i}) must be positive")));
            }
            if g[i].clone() + tol.clone() < g[i - 1] {
                return Err(Error::Domain(format!("g is not nondecreasing at {i}")));
            }
            if i + 1 < g.len() {
                let left = g[i].clone() - g[i - 1].clone();
                let right = g[i + 1].clone() - g[i].clone();
                if right > left + tol.clone() {
                    return Err(Error::Domain(format!("g is not concave at {i}")));
                }
            }
        }
        let m = g.len() - 1;
        Ok(Self::raw(GroundSet::indexed(m), OracleKind::Cardinality { g }))
    }

    pub fn graphic(graph: Graph) -> Result<Self> {
        if graph.num_edges() == 0 {
            return Err(Error::Domain("graphic oracle needs at least one edge".into()));
        }
        if graph.has_loops() {
            return Err(Error::Domain("graphic oracle requires a loopless graph".into()));
        }
        let m = graph.num_edges();
        Ok(Self::raw(GroundSet::indexed(m), OracleKind::Graphic { graph }))
    }

    pub fn partition(m: usize, blocks: Vec<Vec<usize>>, capacities: Vec<usize>) -> Result<Self> {
        check_len(blocks.len(), capacities.len())?;
        let mut block_of = vec![usize::MAX; m];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e >= m {
                    return Err(Error::Domain(format!("block {b} references element {e} >= {m}")));
                }
                if block_of[e] != usize::MAX {
                    return Err(Error::Domain(format!("element {e} appears in two blocks")));
                }
                block_of[e] = b;
            }
        }
        if let Some(e) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::Domain(format!("element {e} is in no block")));
        }
        if m == 0 || capacities.iter().any(|&c| c == 0) {
            return Err(Error::Domain("partition matroid needs m >= 1 and positive capacities".into()));
        }
        let mut oracle = Self::raw(GroundSet::indexed(m), OracleKind::Partition { blocks, capacities });
        oracle.block_of = block_of;
        Ok(oracle)
    }

    /// Builds an oracle from a full value table (index = subset bitmask) and
    /// verifies the axioms exhaustively when `m <= AXIOM_CHECK_CAP`.
    pub fn explicit(m: usize, values: Vec<S>) -> Result<Self> {
        if m == 0 || m > ENUMERATION_CAP {
            return Err(Error::Capacity { what: "explicit table ground set".into(), size: m, cap: ENUMERATION_CAP });
        }
        check_len(1usize << m, values.len())?;
        let oracle = Self::raw(GroundSet::indexed(m), OracleKind::Explicit { values });
        if m <= AXIOM_CHECK_CAP {
            oracle.check_axioms()?;
        }
        Ok(oracle)
    }

    fn raw(ground: GroundSet, kind: OracleKind<S>) -> Self {
        Self { ground, kind, block_of: Vec::new() }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_len(self.m(), labels.len())?;
        self.ground = GroundSet::new(labels)?;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.ground.len()
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn kind(&self) -> &OracleKind<S> {
        &self.kind
    }

    pub fn graph(&self) -> Option<&Graph> {
        match &self.kind {
            OracleKind::Graphic { graph } => Some(graph),
            _ => None,
        }
    }

    /// `f(S)` for a list of element indices (duplicates are ignored).
    pub fn evaluate(&self, subset: &[usize]) -> Result<S> {
        let mut chosen = vec![false; self.m()];
        for &e in subset {
            if e >= self.m() {
                return Err(Error::Domain(format!("element {e} out of range 0..{}", self.m())));
            }
            chosen[e] = true;
        }
        Ok(self.eval_indicator(&chosen))
    }

    /// `f(E)`.
    pub fn total(&self) -> S {
        self.eval_indicator(&vec![true; self.m()])
    }

    pub fn eval_indicator(&self, chosen: &[bool]) -> S {
        let count = || chosen.iter().filter(|&&c| c).count();
        match &self.kind {
            OracleKind::Uniform { k } => S::from_count(count().min(*k)),
            OracleKind::Cardinality { g } => g[count()].clone(),
            OracleKind::Graphic { graph } => {
                S::from_count(graph.rank_of(chosen.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)))
            }
            OracleKind::Partition { capacities, .. } => {
                let mut counts = vec![0usize; capacities.len()];
                for (e, &c) in chosen.iter().enumerate() {
                    if c {
                        counts[self.block_of[e]] += 1;
                    }
                }
                S::from_count(counts.iter().zip(capacities).map(|(&n, &c)| n.min(c)).sum())
            }
            OracleKind::Explicit { values } => {
                let mask = chosen.iter().enumerate().filter(|(_, &c)| c).fold(0usize, |acc, (i, _)| acc | 1 << i);
                values[mask].clone()
            }
        }
    }

    /// `f` on a bitmask; requires `m <= 64`.
    pub fn eval_mask(&self, mask: u64) -> S {
        match &self.kind {
            OracleKind::Uniform { k } => S::from_count((mask.count_ones() as usize).min(*k)),
            OracleKind::Cardinality { g } => g[mask.count_ones() as usize].clone(),
            OracleKind::Explicit { values } => values[mask as usize].clone(),
            OracleKind::Graphic { graph } => S::from_count(graph.rank_of(bits(mask))),
            OracleKind::Partition { .. } => self.eval_indicator(&mask_to_indicator(mask, self.m())),
        }
    }

    /// Exhaustively verifies normalization, positivity, monotonicity and
    /// submodularity (through the equivalent local exchange conditions).
    pub fn check_axioms(&self) -> Result<()> {
        let m = self.m();
        if m > AXIOM_CHECK_CAP {
            return Err(Error::Capacity { what: "axiom check".into(), size: m, cap: AXIOM_CHECK_CAP });
        }
        let tol = S::feas_tol();
        let values: Vec<S> = (0..1u64 << m).map(|mask| self.eval_mask(mask)).collect();
        if !values[0].near(&S::zero(), &tol) {
            return Err(Error::Domain("f(∅) must be 0".into()));
        }
        for mask in 1..values.len() {
            if values[mask] <= S::zero() {
                return Err(Error::Domain(format!("f must be positive on nonempty sets (mask {mask:#b})")));
            }
        }
        for mask in 0..values.len() {
            for e in 0..m {
                if mask & (1 << e) != 0 {
                    continue;
                }
                let gain_e = values[mask | 1 << e].clone() - values[mask].clone();
                if gain_e < -tol.clone() {
                    return Err(Error::Domain(format!("f is not monotone at mask {mask:#b} + {e}")));
                }
                for e2 in e + 1..m {
                    if mask & (1 << e2) != 0 {
                        continue;
                    }
                    let gain_after = values[mask | 1 << e | 1 << e2].clone() - values[mask | 1 << e2].clone();
                    if gain_after > gain_e.clone() + tol.clone() {
                        return Err(Error::Domain(format!(
                            "f is not submodular at mask {mask:#b} with elements {e}, {e2}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `true` when `f` is a matroid rank function (integral, unit increments).
    pub fn is_matroid(&self) -> bool {
        match &self.kind {
            OracleKind::Uniform { .. } | OracleKind::Graphic { .. } | OracleKind::Partition { .. } => true,
            OracleKind::Cardinality { g } => g.windows(2).all(|w| {
                let inc = w[1].clone() - w[0].clone();
                inc.near(&S::zero(), &S::feas_tol()) || inc.near(&S::one(), &S::feas_tol())
            }),
            OracleKind::Explicit { values } => {
                let m = self.m();
                (0..values.len()).all(|mask| {
                    (0..m).filter(|e| mask & (1 << e) == 0).all(|e| {
                        let inc = values[mask | 1 << e].clone() - values[mask].clone();
                        inc.near(&S::zero(), &S::feas_tol()) || inc.near(&S::one(), &S::feas_tol())
                    })
                })
            }
        }
    }

    /// `g(k)` for cardinality-based kinds.
    fn cardinality_value(&self, k: usize) -> Option<S> {
        match &self.kind {
            OracleKind::Uniform { k: cap } => Some(S::from_count(k.min(*cap))),
            OracleKind::Cardinality { g } => Some(g[k].clone()),
            _ => None,
        }
    }

    pub fn is_cardinality_based(&self) -> bool {
        matches!(self.kind, OracleKind::Uniform { .. } | OracleKind::Cardinality { .. })
    }

    /// `min_A f(A) - w(A)` via the structured route for this kind.
    ///
    /// Exact for every kind. Graphic oracles on more than
    /// [`GRAPHIC_DP_CAP`] vertices search single induced vertex groups: the
    /// value then has the sign of the true minimum and is attained by the
    /// returned set, which is all membership and line search need.
    pub fn min_excess(&self, w: &[S]) -> Result<Excess<S>> {
        check_len(self.m(), w.len())?;
        match &self.kind {
            OracleKind::Uniform { .. } | OracleKind::Cardinality { .. } => {
                let order = sorted_desc(w, None);
                Ok(self.prefix_excess(w, &order, |k| self.cardinality_value(k).expect("cardinality kind")))
            }
            OracleKind::Partition { blocks, capacities } => {
                let mut value = S::zero();
                let mut set = vec![false; self.m()];
                for (block, &cap) in blocks.iter().zip(capacities) {
                    let mut order = block.clone();
                    order.sort_by(|&a, &b| cmp_desc(&w[a], &w[b]).then(a.cmp(&b)));
                    let part = self.prefix_excess(w, &order, |k| S::from_count(k.min(cap)));
                    value = value + part.value;
                    for (e, c) in part.set.into_iter().enumerate() {
                        set[e] |= c;
                    }
                }
                Ok(Excess { value, set })
            }
            OracleKind::Graphic { graph } if graph.num_vertices() <= ENUMERATION_CAP => {
                Ok(graphic_vertex_excess(graph, w))
            }
            _ => self.min_excess_exhaustive(w),
        }
    }

    /// Minimizes `f(A) - w(A)` over all `2^m` subsets.
    pub fn min_excess_exhaustive(&self, w: &[S]) -> Result<Excess<S>> {
        check_len(self.m(), w.len())?;
        self.require_enumerable()?;
        let mut best = S::zero();
        let mut best_mask = 0u64;
        for mask in 1..1u64 << self.m() {
            let val = self.eval_mask(mask) - mask_sum(w, mask);
            if val < best || (val == best && mask.count_ones() > best_mask.count_ones()) {
                best = val;
                best_mask = mask;
            }
        }
        Ok(Excess { value: best, set: mask_to_indicator(best_mask, self.m()) })
    }

    fn require_enumerable(&self) -> Result<()> {
        if self.m() > ENUMERATION_CAP {
            Err(Error::Capacity { what: "subset enumeration".into(), size: self.m(), cap: ENUMERATION_CAP })
        } else {
            Ok(())
        }
    }

    /// Along a fixed descending order, the best prefix `g(k) - w(prefix_k)`
    /// (ties go to the longer prefix).
    fn prefix_excess(&self, w: &[S], order: &[usize], g: impl Fn(usize) -> S) -> Excess<S> {
        let mut best = S::zero();
        let mut best_k = 0;
        let mut acc = S::zero();
        for (i, &e) in order.iter().enumerate() {
            acc = acc + w[e].clone();
            let val = g(i + 1) - acc.clone();
            if val <= best {
                best = val;
                best_k = i + 1;
            }
        }
        let mut set = vec![false; self.m()];
        for &e in &order[..best_k] {
            set[e] = true;
        }
        Excess { value: best, set }
    }

    /// `x ∈ P(f)` (and `x(E) = f(E)` when `in_base`), within `feas_tol`.
    pub fn is_member(&self, x: &[S], in_base: bool) -> Result<bool> {
        check_len(self.m(), x.len())?;
        let tol = S::feas_tol();
        if x.iter().any(|v| !v.to_f64_lossy().is_finite() || *v < -tol.clone()) {
            return Ok(false);
        }
        if in_base && !sum(x.iter().cloned()).near(&self.total(), &tol) {
            return Ok(false);
        }
        Ok(self.min_excess(x)?.value >= -tol)
    }

    /// Exhaustive membership test over all subsets (reference path).
    pub fn is_member_exhaustive(&self, x: &[S], in_base: bool) -> Result<bool> {
        check_len(self.m(), x.len())?;
        let tol = S::feas_tol();
        if x.iter().any(|v| *v < -tol.clone()) {
            return Ok(false);
        }
        if in_base && !sum(x.iter().cloned()).near(&self.total(), &tol) {
            return Ok(false);
        }
        Ok(self.min_excess_exhaustive(x)?.value >= -tol)
    }

    /// The maximal tight set `T(x)`: the union of all `A` with `x(A) = f(A)`.
    pub fn max_tight_set(&self, x: &[S]) -> Result<Vec<usize>> {
        if !self.is_member(x, false)? {
            return Err(Error::Precondition("max_tight_set requires x ∈ P(f)".into()));
        }
        let tol = S::feas_tol();
        let set = match &self.kind {
            OracleKind::Uniform { .. } | OracleKind::Cardinality { .. } => {
                let order = sorted_desc(x, None);
                self.tight_prefix(x, &order, |k| self.cardinality_value(k).expect("cardinality kind"))
            }
            OracleKind::Partition { blocks, capacities } => {
                let mut all = Vec::new();
                for (block, &cap) in blocks.iter().zip(capacities) {
                    let mut order = block.clone();
                    order.sort_by(|&a, &b| cmp_desc(&x[a], &x[b]).then(a.cmp(&b)));
                    all.extend(self.tight_prefix(x, &order, |k| S::from_count(k.min(cap))));
                }
                all
            }
            OracleKind::Graphic { graph } if graph.num_vertices() <= ENUMERATION_CAP => {
                let n = graph.num_vertices();
                let ends: Vec<u64> = graph.edges().iter().map(|&(u, v)| 1u64 << u | 1u64 << v).collect();
                let mut union = vec![false; self.m()];
                for vmask in 1..1u64 << n {
                    let size = vmask.count_ones() as usize;
                    if size < 2 {
                        continue;
                    }
                    let inside: Vec<usize> = (0..ends.len()).filter(|&e| ends[e] & vmask == ends[e]).collect();
                    let load = sum(inside.iter().map(|&e| x[e].clone()));
                    if S::from_count(size - 1) - load <= tol {
                        for e in inside {
                            union[e] = true;
                        }
                    }
                }
                indicator_to_indices(&union)
            }
            _ => return self.max_tight_set_exhaustive(x),
        };
        let mut set = set;
        set.sort_unstable();
        Ok(set)
    }

    /// Union of every tight subset found by enumerating all `2^m` subsets.
    pub fn max_tight_set_exhaustive(&self, x: &[S]) -> Result<Vec<usize>> {
        check_len(self.m(), x.len())?;
        self.require_enumerable()?;
        let tol = S::feas_tol();
        let mut union = 0u64;
        for mask in 1..1u64 << self.m() {
            if self.eval_mask(mask) - mask_sum(x, mask) <= tol {
                union |= mask;
            }
        }
        Ok(bits(union).collect())
    }

    fn tight_prefix(&self, x: &[S], order: &[usize], g: impl Fn(usize) -> S) -> Vec<usize> {
        let tol = S::feas_tol();
        let mut acc = S::zero();
        let mut longest = 0;
        for (i, &e) in order.iter().enumerate() {
            acc = acc + x[e].clone();
            if g(i + 1) - acc.clone() <= tol {
                longest = i + 1;
            }
        }
        order[..longest].to_vec()
    }

    /// Largest `δ >= 0` with `x + δd ∈ P(f)`.
    pub fn line_search(&self, x: &[S], d: &[S]) -> Result<S> {
        Ok(self.line_search_detailed(x, d)?.step)
    }

    /// Line search reporting which route answered it. Cardinality-based
    /// oracles first try the single-pass ordered route and fall back to
    /// discrete Newton when the order is not stable along the segment.
    pub fn line_search_detailed(&self, x: &[S], d: &[S]) -> Result<LineSearch<S>> {
        self.check_direction(x, d)?;
        if self.is_cardinality_based() {
            if let Some(step) = self.line_search_ordered(x, d)? {
                return Ok(LineSearch { step, route: LineRoute::Ordered, newton_steps: 0 });
            }
        }
        let (step, newton_steps) = self.newton(x, d, |w| self.min_excess(w))?;
        Ok(LineSearch { step, route: LineRoute::Newton, newton_steps })
    }

    /// Discrete Newton with exhaustive submodular minimization at every step
    /// (reference route, `m <= ENUMERATION_CAP`).
    pub fn line_search_exhaustive(&self, x: &[S], d: &[S]) -> Result<S> {
        self.check_direction(x, d)?;
        self.require_enumerable()?;
        Ok(self.newton(x, d, |w| self.min_excess_exhaustive(w))?.0)
    }

    /// Cardinality line search along the order of `x` (descending, ties by
    /// larger `d`, then index). Returns `None` when that order is not the
    /// sorted order of `x + δd` at the candidate step, in which case the
    /// single-pass formula does not apply.
    pub fn line_search_ordered(&self, x: &[S], d: &[S]) -> Result<Option<S>> {
        self.check_direction(x, d)?;
        if !self.is_cardinality_based() {
            return Err(Error::Unsupported("ordered line search needs a cardinality-based oracle".into()));
        }
        let order = sorted_desc(x, Some(d));
        Ok(self.line_search_presorted(x, d, &order))
    }

    /// Single pass over a precomputed order; `O(m)`.
    pub fn line_search_presorted(&self, x: &[S], d: &[S], order: &[usize]) -> Option<S> {
        let mut xs = S::zero();
        let mut ds = S::zero();
        let mut best: Option<S> = None;
        for (i, &e) in order.iter().enumerate() {
            xs = xs + x[e].clone();
            ds = ds + d[e].clone();
            if ds > S::zero() {
                let g = self.cardinality_value(i + 1)?;
                let t = (g - xs.clone()) / ds.clone();
                best = Some(match best {
                    Some(b) => b.min_val(t),
                    None => t,
                });
            }
        }
        let best = best?;
        if best < -S::step_tol() {
            // x is outside P(f); let the caller's fallback report it.
            return None;
        }
        let step = best.max_val(S::zero());
        let tol = S::feas_tol();
        let stable = order.windows(2).all(|p| {
            let a = x[p[0]].clone() + step.clone() * d[p[0]].clone();
            let b = x[p[1]].clone() + step.clone() * d[p[1]].clone();
            a + tol.clone() >= b
        });
        stable.then_some(step)
    }

    fn check_direction(&self, x: &[S], d: &[S]) -> Result<()> {
        check_len(self.m(), x.len())?;
        check_len(self.m(), d.len())?;
        if d.iter().any(|v| *v < S::zero()) {
            return Err(Error::Domain("line search direction must be nonnegative".into()));
        }
        if d.iter().all(|v| v.is_zero()) {
            return Err(Error::Domain("line search direction must be nonzero".into()));
        }
        Ok(())
    }

    /// Dinkelbach iteration for `max δ` with `min_A f(A) - (x+δd)(A) >= 0`.
    fn newton(&self, x: &[S], d: &[S], minimize: impl Fn(&[S]) -> Result<Excess<S>>) -> Result<(S, usize)> {
        let tol = S::feas_tol();
        let m = self.m();
        let mut delta = (self.total() - sum(x.iter().cloned())) / sum(d.iter().cloned());
        let max_steps = 4 * m + 16;
        for steps in 1..=max_steps {
            let w: Vec<S> = x.iter().zip(d).map(|(a, b)| a.clone() + delta.clone() * b.clone()).collect();
            let ex = minimize(&w)?;
            if ex.value >= -tol.clone() {
                return self.accept_step(delta, steps);
            }
            let d_mass = indicator_sum(d, &ex.set);
            if d_mass <= S::zero() {
                return Err(Error::Precondition("line search requires x ∈ P(f)".into()));
            }
            let next = (self.eval_indicator(&ex.set) - indicator_sum(x, &ex.set)) / d_mass;
            if next >= delta {
                return self.accept_step(delta, steps);
            }
            delta = next;
        }
        Err(Error::Internal(format!("discrete Newton did not converge in {max_steps} steps")))
    }

    fn accept_step(&self, delta: S, steps: usize) -> Result<(S, usize)> {
        if delta < -S::step_tol() {
            return Err(Error::Precondition("line search requires x ∈ P(f)".into()));
        }
        Ok((delta.max_val(S::zero()), steps))
    }

    /// Edmonds' greedy algorithm: a vertex of `B(f)` optimizing `w·x`.
    /// Elements are taken in order of `w` (ascending for `Min`), ties by index.
    pub fn greedy(&self, w: &[S], sense: Sense) -> Result<Vec<S>> {
        check_len(self.m(), w.len())?;
        let mut order: Vec<usize> = (0..self.m()).collect();
        order.sort_by(|&a, &b| {
            let c = match sense {
                Sense::Min => w[a].partial_cmp(&w[b]),
                Sense::Max => w[b].partial_cmp(&w[a]),
            };
            c.unwrap_or(Ordering::Equal).then(a.cmp(&b))
        });
        Ok(self.greedy_in_order(&order))
    }

    /// Greedy vertex for an explicit element order.
    pub fn greedy_in_order(&self, order: &[usize]) -> Vec<S> {
        let m = self.m();
        let mut x = vec![S::zero(); m];
        if let OracleKind::Graphic { graph } = &self.kind {
            let mut uf = UnionFind::new(graph.num_vertices());
            for &e in order {
                let (u, v) = graph.edges()[e];
                if uf.union(u, v) {
                    x[e] = S::one();
                }
            }
            return x;
        }
        let mut chosen = vec![false; m];
        let mut prev = S::zero();
        for &e in order {
            chosen[e] = true;
            let cur = self.eval_indicator(&chosen);
            x[e] = cur.clone() - prev;
            prev = cur;
        }
        x
    }

    /// All bases of a matroid as indicator vectors, in lexicographic order of
    /// their sorted index lists.
    pub fn bases(&self) -> Result<Vec<Vec<bool>>> {
        if !self.is_matroid() {
            return Err(Error::Unsupported("bases are only enumerated for matroid rank functions".into()));
        }
        let m = self.m();
        let r = self.total().to_f64_lossy().round() as usize;
        let mut out = Vec::new();
        for_each_combination(m, r, |combo| {
            let mut chosen = vec![false; m];
            for &e in combo {
                chosen[e] = true;
            }
            if self.eval_indicator(&chosen).to_f64_lossy().round() as usize == r {
                out.push(chosen);
            }
        });
        Ok(out)
    }

    /// Circuits (minimal dependent sets) of a matroid, as sorted index lists.
    pub fn circuits(&self) -> Result<Vec<Vec<usize>>> {
        if !self.is_matroid() {
            return Err(Error::Unsupported("circuits are only defined for matroid rank functions".into()));
        }
        self.require_enumerable()?;
        let m = self.m();
        let rank: Vec<usize> = (0..1u64 << m).map(|mask| self.eval_mask(mask).to_f64_lossy().round() as usize).collect();
        let dependent = |mask: u64| rank[mask as usize] < mask.count_ones() as usize;
        let mut out = Vec::new();
        for mask in 1..1u64 << m {
            if dependent(mask) && bits(mask).all(|e| !dependent(mask & !(1 << e))) {
                out.push(bits(mask).collect());
            }
        }
        Ok(out)
    }
}

/// Minimizes `(|S| - 1) - w(E(S))` over vertex subsets with `|S| >= 2`.
fn graphic_vertex_excess<S: Scalar>(graph: &Graph, w: &[S]) -> Excess<S> {
    let n = graph.num_vertices();
    let ends: Vec<u64> = graph.edges().iter().map(|&(u, v)| 1u64 << u | 1u64 << v).collect();
    // Edges of nonpositive weight never lower f(A) - w(A).
    let useful = |e: usize| w[e] > S::zero();
    let group_value = |vmask: u64| {
        let size = vmask.count_ones() as usize;
        if size < 2 {
            return S::zero();
        }
        let load = sum((0..ends.len()).filter(|&e| useful(e) && ends[e] & vmask == ends[e]).map(|e| w[e].clone()));
        S::from_count(size - 1) - load
    };
    let chosen_mask = if n <= GRAPHIC_DP_CAP {
        // Optimal sets are unions of induced edge sets over disjoint vertex groups.
        let full = (1usize << n) - 1;
        let g: Vec<S> = (0..=full as u64).map(|v| group_value(v).min_val(S::zero())).collect();
        let mut best = vec![S::zero(); full + 1];
        let mut pick = vec![0usize; full + 1];
        for u in 1..=full {
            let low = u & u.wrapping_neg();
            let rest = u ^ low;
            let mut sub = rest;
            let mut first = true;
            loop {
                let s = sub | low;
                let val = g[s].clone() + best[u ^ s].clone();
                if first || val < best[u] {
                    best[u] = val;
                    pick[u] = s;
                    first = false;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        let mut groups = Vec::new();
        let mut u = full;
        while u != 0 {
            if g[pick[u]] < S::zero() {
                groups.push(pick[u] as u64);
            }
            u ^= pick[u];
        }
        groups
    } else {
        let mut best = S::zero();
        let mut best_mask = None;
        for vmask in 1..1u64 << n {
            let val = group_value(vmask);
            if val < best {
                best = val;
                best_mask = Some(vmask);
            }
        }
        best_mask.into_iter().collect()
    };
    let set: Vec<bool> = (0..ends.len())
        .map(|e| useful(e) && chosen_mask.iter().any(|&v| ends[e] & v == ends[e]))
        .collect();
    let value = sum(chosen_mask.iter().map(|&v| group_value(v)));
    Excess { value, set }
}

/// Indices sorted by descending `x`, ties broken by descending `d` (if given)
/// and then ascending index.
pub(crate) fn sorted_desc<S: Scalar>(x: &[S], d: Option<&[S]>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        cmp_desc(&x[a], &x[b])
            .then_with(|| d.map_or(Ordering::Equal, |d| cmp_desc(&d[a], &d[b])))
            .then(a.cmp(&b))
    });
    order
}

fn cmp_desc<S: Scalar>(a: &S, b: &S) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

pub(crate) fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1u64 << i) != 0)
}

pub(crate) fn mask_to_indicator(mask: u64, m: usize) -> Vec<bool> {
    (0..m).map(|i| mask & (1u64 << i) != 0).collect()
}

pub(crate) fn mask_sum<S: Scalar>(w: &[S], mask: u64) -> S {
    sum(bits(mask).map(|i| w[i].clone()))
}

pub(crate) fn indicator_sum<S: Scalar>(w: &[S], set: &[bool]) -> S {
    sum(w.iter().zip(set).filter(|(_, &c)| c).map(|(v, _)| v.clone()))
}

pub fn indicator_to_indices(set: &[bool]) -> Vec<usize> {
    set.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect()
}

/// Calls `visit` on every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_combination(m: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        visit(&combo);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if combo[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}
