//! Symmetric Nash equilibria of matroid self-games with a symmetric loss.
//!
//! Both players pick bases of the same matroid and the loss is `xᵀLy` with
//! `Lᵀ = L`. For `x ∈ B(f)`, with `P₁, …, P_k` the level sets of `Lx`, the
//! following are equivalent and each says `(x, x)` is an equilibrium:
//! every base has the same cost under `Lx`; every base meets each `Pᵢ` in
//! `r(Pᵢ)` elements; `x(Pᵢ) = r(Pᵢ)`; every circuit lies inside one `Pᵢ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bregman::{inc_fix, level_sets, minimize_separable, MirrorMap, WeightedSquares};
use crate::error::{check_len, Error, Result};
use crate::game::LossMatrix;
use crate::graph::Graph;
use crate::scalar::{sum, Real, Scalar};
use crate::submodular::{indicator_sum, SubmodularOracle};

/// Largest ground set on which bases and circuits are enumerated.
pub const SNE_ENUMERATION_CAP: usize = 12;

/// Largest block (in vertices) checked for uniform density.
pub const DENSITY_VERTEX_CAP: usize = 10;

/// Per-condition outcomes; conditions that need base or circuit enumeration
/// are `None` above [`SNE_ENUMERATION_CAP`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SneConditions {
    pub is_sne: bool,
    pub equal_base_cost: Option<bool>,
    pub bases_meet_blocks: Option<bool>,
    pub block_masses_match: bool,
    pub circuits_within_blocks: Option<bool>,
}

impl SneConditions {
    /// `true` if every evaluated condition gives the same answer.
    pub fn consistent(&self) -> bool {
        [self.equal_base_cost, self.bases_meet_blocks, self.circuits_within_blocks]
            .iter()
            .flatten()
            .all(|&c| c == self.block_masses_match)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum SneWitness {
    /// Two bases with different cost under `Lx`.
    UnequalBases { cheaper: Vec<usize>, costlier: Vec<usize> },
    /// A base meeting block `block` in a number of elements other than its rank.
    BaseMissesBlock { base: Vec<usize>, block: usize },
    /// A block whose mass differs from its rank.
    BlockMass { block: usize },
    /// A circuit meeting more than one block.
    SplitCircuit { circuit: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SneVerdict<S> {
    pub conditions: SneConditions,
    /// Level sets of `Lx` in increasing order.
    pub blocks: Vec<Vec<usize>>,
    pub levels: Vec<S>,
    pub witnesses: Vec<SneWitness>,
}

impl<S> SneVerdict<S> {
    pub fn is_sne(&self) -> bool {
        self.conditions.is_sne
    }
}

/// Evaluates the four characterizations independently; the verdict is the
/// block-mass condition.
pub fn check_sne<S: Scalar>(f: &SubmodularOracle<S>, loss: &LossMatrix<S>, x: &[S]) -> Result<SneVerdict<S>> {
    let m = f.m();
    check_len(m, x.len())?;
    if loss.n_rows() != m || loss.n_cols() != m {
        return Err(Error::Dimension { expected: m, got: loss.n_rows() });
    }
    if !loss.is_symmetric() {
        return Err(Error::Precondition("loss matrix must be symmetric".into()));
    }
    if !f.is_matroid() {
        return Err(Error::Precondition("symmetric equilibria are characterized for matroids only".into()));
    }
    if !f.is_member(x, true)? {
        return Err(Error::Precondition("x must lie in the base polytope".into()));
    }
    let lx = loss.apply(x);
    let (blocks, levels) = level_sets(&lx, S::level_tol());
    let tol = S::level_tol() * S::from_count(m.max(1));
    let mut witnesses = Vec::new();

    let mut block_masses_match = true;
    for (i, block) in blocks.iter().enumerate() {
        let mut chosen = vec![false; m];
        for &e in block {
            chosen[e] = true;
        }
        if !indicator_sum(x, &chosen).near(&f.eval_indicator(&chosen), &tol) {
            block_masses_match = false;
            witnesses.push(SneWitness::BlockMass { block: i });
            break;
        }
    }

    let (mut equal_base_cost, mut bases_meet_blocks, mut circuits_within_blocks) = (None, None, None);
    if m <= SNE_ENUMERATION_CAP {
        let bases: Vec<Vec<usize>> = f
            .bases()?
            .iter()
            .map(|b| b.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect())
            .collect();

        let costs: Vec<S> = bases.iter().map(|b| sum(b.iter().map(|&e| lx[e].clone()))).collect();
        let lo = (0..costs.len()).min_by(|&a, &b| costs[a].partial_cmp(&costs[b]).expect("finite costs"));
        let hi = (0..costs.len()).max_by(|&a, &b| costs[a].partial_cmp(&costs[b]).expect("finite costs"));
        let equal = match (lo, hi) {
            (Some(lo), Some(hi)) => {
                let ok = costs[hi].near(&costs[lo], &tol);
                if !ok {
                    witnesses.push(SneWitness::UnequalBases { cheaper: bases[lo].clone(), costlier: bases[hi].clone() });
                }
                ok
            }
            _ => true,
        };
        equal_base_cost = Some(equal);

        let block_of = block_index(&blocks, m);
        let ranks: Vec<usize> = blocks
            .iter()
            .map(|b| f.evaluate(b).map(|r| r.to_f64_lossy().round() as usize))
            .collect::<Result<_>>()?;
        let mut meets = true;
        'bases: for b in &bases {
            let mut counts = vec![0usize; blocks.len()];
            for &e in b {
                counts[block_of[e]] += 1;
            }
            for (i, (&c, &r)) in counts.iter().zip(&ranks).enumerate() {
                if c != r {
                    meets = false;
                    witnesses.push(SneWitness::BaseMissesBlock { base: b.clone(), block: i });
                    break 'bases;
                }
            }
        }
        bases_meet_blocks = Some(meets);

        let mut within = true;
        for c in f.circuits()? {
            if c.iter().any(|&e| block_of[e] != block_of[c[0]]) {
                within = false;
                witnesses.push(SneWitness::SplitCircuit { circuit: c });
                break;
            }
        }
        circuits_within_blocks = Some(within);
    }

    Ok(SneVerdict {
        conditions: SneConditions {
            is_sne: block_masses_match,
            equal_base_cost,
            bases_meet_blocks,
            block_masses_match,
            circuits_within_blocks,
        },
        blocks,
        levels,
        witnesses,
    })
}

fn block_index(blocks: &[Vec<usize>], m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for (i, b) in blocks.iter().enumerate() {
        for &e in b {
            out[e] = i;
        }
    }
    out
}

/// The base maximizing the ascending-sorted vector of `x_e / w_e`
/// lexicographically, obtained as the minimizer of `Σ x_e² / w_e` over `B(f)`.
pub fn lex_optimal_base<S: Scalar>(f: &SubmodularOracle<S>, w: &[S]) -> Result<Vec<S>> {
    check_len(f.m(), w.len())?;
    if w.iter().any(|v| *v <= S::zero()) {
        return Err(Error::Domain("weights must be positive".into()));
    }
    Ok(minimize_separable(f, &WeightedSquares(w))?.point)
}

/// For a positive diagonal loss, the only possible symmetric equilibrium is
/// the lexicographically optimal base for weights `1/L_ee`. Returns it when
/// it passes the characterization, `None` otherwise.
pub fn solve_sne_diagonal<S: Scalar>(
    f: &SubmodularOracle<S>,
    loss: &LossMatrix<S>,
) -> Result<(Option<Vec<S>>, SneVerdict<S>)> {
    let d = loss
        .as_diagonal()
        .ok_or_else(|| Error::Precondition("loss matrix must be diagonal".into()))?;
    check_len(f.m(), d.len())?;
    if d.iter().any(|v| *v <= S::zero()) {
        return Err(Error::Precondition("diagonal entries must be positive".into()));
    }
    let w: Vec<S> = d.iter().map(|v| S::one() / v.clone()).collect();
    let x = lex_optimal_base(f, &w)?;
    let verdict = check_sne(f, loss, &x)?;
    Ok((verdict.is_sne().then_some(x), verdict))
}

/// `L = diag(1/x)`, for which `(x, x)` is a symmetric equilibrium.
pub fn construct_loss<S: Scalar>(x: &[S]) -> Result<LossMatrix<S>> {
    if let Some(e) = x.iter().position(|v| *v <= S::zero()) {
        return Err(Error::Domain(format!("x must be strictly positive (index {e})")));
    }
    LossMatrix::diagonal(x.iter().map(|v| S::one() / v.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDensity {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub uniformly_dense: bool,
    /// A vertex subset denser than the block, when one exists.
    pub witness: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub uniformly_dense: bool,
    pub blocks: Vec<BlockDensity>,
}

/// Checks that every 2-connected block `(V_B, E_B)` satisfies
/// `|E_S| / (|S| - 1) <= |E_B| / (|V_B| - 1)` for all `S ⊆ V_B`, `|S| >= 2`.
pub fn is_uniformly_dense_blockwise(graph: &Graph) -> Result<DensityReport> {
    if graph.has_loops() {
        return Err(Error::Domain("uniform density is defined for loopless graphs".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Precondition("graph must be connected".into()));
    }
    let mut blocks = Vec::new();
    for edges in graph.blocks() {
        let vertices = graph.vertices_of(&edges);
        let k = vertices.len();
        if k > DENSITY_VERTEX_CAP {
            return Err(Error::Capacity { what: "block vertex enumeration".into(), size: k, cap: DENSITY_VERTEX_CAP });
        }
        let local = |v: usize| vertices.binary_search(&v).expect("endpoint of block edge");
        let ends: Vec<u32> = edges
            .iter()
            .map(|&e| {
                let (u, v) = graph.edges()[e];
                1u32 << local(u) | 1u32 << local(v)
            })
            .collect();
        let total = edges.len();
        let mut witness = None;
        for mask in 1u32..1 << k {
            let size = mask.count_ones() as usize;
            if size < 2 || size == k {
                continue;
            }
            let inside = ends.iter().filter(|&&em| em & mask == em).count();
            if inside * (k - 1) > total * (size - 1) {
                witness = Some((0..k).filter(|i| mask & (1 << i) != 0).map(|i| vertices[i]).collect());
                break;
            }
        }
        blocks.push(BlockDensity { edges, vertices, uniformly_dense: witness.is_none(), witness });
    }
    Ok(DensityReport { uniformly_dense: blocks.iter().all(|b| b.uniformly_dense), blocks })
}

/// Randomized search for symmetric equilibria: projected gradient descent
/// on `½xᵀLx` over `B(f)` from random bases, keeping the limits that pass
/// [`check_sne`]. Returns the distinct equilibria found.
pub fn search_symmetric_equilibria<T: Real>(
    f: &SubmodularOracle<T>,
    loss: &LossMatrix<T>,
    restarts: usize,
    seed: u64,
) -> Result<Vec<Vec<T>>> {
    if !loss.is_symmetric() {
        return Err(Error::Precondition("loss matrix must be symmetric".into()));
    }
    let m = f.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 1 / (largest absolute row sum) bounds 1 / λ_max(L).
    let row_sum = loss.rows().iter().map(|r| r.iter().fold(T::zero(), |a, v| a + v.abs())).fold(T::zero(), T::max);
    let step = T::one() / row_sum.max(T::lit(1e-12));
    let mut found: Vec<Vec<T>> = Vec::new();
    for _ in 0..restarts {
        let y: Vec<T> = (0..m).map(|_| T::lit(rng.gen_range(-2.0..2.0))).collect();
        let mut x = inc_fix(f, MirrorMap::Euclidean, &y)?.point;
        for _ in 0..2000 {
            let g = loss.apply(&x);
            let target: Vec<T> = x.iter().zip(&g).map(|(&a, &b)| a - step * b).collect();
            let next = inc_fix(f, MirrorMap::Euclidean, &target)?.point;
            let moved = next.iter().zip(&x).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
            x = next;
            if moved < T::lit(1e-13) {
                break;
            }
        }
        if !check_sne(f, loss, &x)?.is_sne() {
            continue;
        }
        let fresh = found
            .iter()
            .all(|p| p.iter().zip(&x).any(|(&a, &b)| (a - b).abs() > T::lit(1e-6)));
        if fresh {
            found.push(x);
        }
    }
    Ok(found)
}
