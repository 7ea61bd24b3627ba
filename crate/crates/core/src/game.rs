//! Two-player zero-sum games over 0/1 polytopes with bilinear loss `xᵀLy`.
//! The row player (strategy set `P`) minimizes, the column player (`Q`)
//! maximizes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::counting::{caratheodory_decompose, CountingOracle};
use crate::error::{check_len, Error, Result};
use crate::linalg::matrix_game;
use crate::scalar::{dot, Scalar};
use crate::sne::SneConditions;
use crate::submodular::{OracleKind, Sense, SubmodularOracle};

/// Largest `|vert(P)|·|vert(Q)|` solved by [`Game::lp_value_by_enumeration`].
pub const LP_ENUMERATION_CAP: usize = 1_000_000;

/// Largest number of `r`-subsets scanned when listing matroid bases.
pub const BASIS_CANDIDATE_CAP: usize = 10_000_000;

/// Largest ground set whose polymatroid vertices are listed through
/// all element orders.
pub const PERMUTATION_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyPolytope<S> {
    /// Convex hull of an explicit list of 0/1 vectors.
    Vertices { m: usize, vertices: Vec<Vec<bool>> },
    /// Base polytope `B(f)`; matroid bases when `f` is a rank function and
    /// spanning trees when `f` is graphic.
    Polymatroid(SubmodularOracle<S>),
}

impl<S: Scalar> StrategyPolytope<S> {
    pub fn vertices(m: usize, vertices: Vec<Vec<bool>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Domain("vertex list must be nonempty".into()));
        }
        for v in &vertices {
            check_len(m, v.len())?;
        }
        Ok(StrategyPolytope::Vertices { m, vertices })
    }

    pub fn dim(&self) -> usize {
        match self {
            StrategyPolytope::Vertices { m, .. } => *m,
            StrategyPolytope::Polymatroid(f) => f.m(),
        }
    }

    pub fn oracle(&self) -> Option<&SubmodularOracle<S>> {
        match self {
            StrategyPolytope::Polymatroid(f) => Some(f),
            StrategyPolytope::Vertices { .. } => None,
        }
    }

    /// Optimizes `wᵀx` over the polytope. Ties go to the lexicographically
    /// first vertex (greedy takes equal weights in index order; vertex lists
    /// keep their given order).
    pub fn linopt(&self, w: &[S], sense: Sense) -> Result<(Vec<S>, S)> {
        check_len(self.dim(), w.len())?;
        match self {
            StrategyPolytope::Polymatroid(f) => {
                let x = f.greedy(w, sense)?;
                let value = dot(&x, w);
                Ok((x, value))
            }
            StrategyPolytope::Vertices { vertices, .. } => {
                let mut best: Option<(usize, S)> = None;
                for (i, u) in vertices.iter().enumerate() {
                    let value = indicator_dot(u, w);
                    let better = match &best {
                        None => true,
                        Some((_, b)) => match sense {
                            Sense::Max => value > *b,
                            Sense::Min => value < *b,
                        },
                    };
                    if better {
                        best = Some((i, value));
                    }
                }
                let (i, value) = best.expect("nonempty vertex list");
                Ok((to_scalar(&vertices[i]), value))
            }
        }
    }

    /// Every vertex, in lexicographic order for matroids and vertex lists.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vec<S>>> {
        match self {
            StrategyPolytope::Vertices { vertices, .. } => Ok(vertices.iter().map(|v| to_scalar(v)).collect()),
            StrategyPolytope::Polymatroid(f) if f.is_matroid() => {
                let r = f.total().to_f64_lossy().round() as usize;
                let candidates = binomial(f.m(), r);
                if candidates > BASIS_CANDIDATE_CAP as f64 {
                    return Err(Error::Capacity {
                        what: "basis enumeration".into(),
                        size: candidates.min(usize::MAX as f64) as usize,
                        cap: BASIS_CANDIDATE_CAP,
                    });
                }
                Ok(f.bases()?.iter().map(|b| to_scalar(b)).collect())
            }
            StrategyPolytope::Polymatroid(f) => {
                if f.m() > PERMUTATION_CAP {
                    return Err(Error::Capacity { what: "polymatroid vertex enumeration".into(), size: f.m(), cap: PERMUTATION_CAP });
                }
                let mut out: Vec<Vec<S>> = Vec::new();
                let mut order: Vec<usize> = (0..f.m()).collect();
                permutations(&mut order, 0, &mut |perm| {
                    let v = f.greedy_in_order(perm);
                    if !out.iter().any(|u| u.iter().zip(&v).all(|(a, b)| a.near(b, &S::feas_tol()))) {
                        out.push(v);
                    }
                });
                out.sort_by(|a, b| lex_desc(a, b));
                Ok(out)
            }
        }
    }

    /// Membership in the polytope (hull membership by LP for vertex lists).
    pub fn contains(&self, x: &[S]) -> Result<bool> {
        check_len(self.dim(), x.len())?;
        match self {
            StrategyPolytope::Polymatroid(f) => f.is_member(x, true),
            StrategyPolytope::Vertices { vertices, .. } => match caratheodory_decompose(vertices, x) {
                Ok(_) => Ok(true),
                Err(Error::Infeasible { .. }) => Ok(false),
                Err(e) => Err(e),
            },
        }
    }

    /// A counting oracle over the same vertex set, for product-distribution
    /// solvers.
    pub fn counting_oracle(&self) -> Result<CountingOracle> {
        match self {
            StrategyPolytope::Vertices { m, vertices } => CountingOracle::enumeration(*m, vertices.clone()),
            StrategyPolytope::Polymatroid(f) => match f.kind() {
                OracleKind::Graphic { graph } => Ok(CountingOracle::matrix_tree(graph.clone())),
                OracleKind::Uniform { k } => Ok(CountingOracle::k_subsets(f.m(), (*k).min(f.m()))),
                _ if f.is_matroid() => CountingOracle::enumeration(f.m(), f.bases()?),
                _ => Err(Error::Unsupported(
                    "counting oracles need 0/1 vertices; this polymatroid is not a matroid".into(),
                )),
            },
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k.min(n)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn lex_desc<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

pub(crate) fn to_scalar<S: Scalar>(u: &[bool]) -> Vec<S> {
    u.iter().map(|&b| if b { S::one() } else { S::zero() }).collect()
}

fn indicator_dot<S: Scalar>(u: &[bool], w: &[S]) -> S {
    u.iter().zip(w).filter(|(&b, _)| b).fold(S::zero(), |acc, (_, v)| acc + v.clone())
}

/// Dense `m × n` loss matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix<S> {
    rows: Vec<Vec<S>>,
    cols: usize,
}

impl<S: Scalar> LossMatrix<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Domain("loss matrix must be nonempty".into()));
        }
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Self { rows, cols })
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::diagonal((0..m).map(|_| S::one()).collect())
    }

    pub fn diagonal(d: Vec<S>) -> Result<Self> {
        let m = d.len();
        Self::new(
            d.into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut row = vec![S::zero(); m];
                    row[i] = v;
                    row
                })
                .collect(),
        )
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::new(vec![vec![S::zero(); n]; m])
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.rows[i][j]
    }

    /// `Ly`.
    pub fn apply(&self, y: &[S]) -> Vec<S> {
        self.rows.iter().map(|r| dot(r, y)).collect()
    }

    /// `Lᵀx`.
    pub fn apply_transpose(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.cols];
        for (xi, row) in x.iter().zip(&self.rows) {
            if xi.is_zero() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(row) {
                *o = o.clone() + xi.clone() * v.clone();
            }
        }
        out
    }

    pub fn bilinear(&self, x: &[S], y: &[S]) -> S {
        dot(x, &self.apply(y))
    }

    pub fn min_entry(&self) -> S {
        self.rows.iter().flatten().skip(1).fold(self.rows[0][0].clone(), |a, v| a.min_val(v.clone()))
    }

    pub fn max_abs_entry(&self) -> S {
        self.rows.iter().flatten().fold(S::zero(), |a, v| a.max_val(v.abs_val()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.min_entry() >= S::zero()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows.len() == self.cols
            && (0..self.cols).all(|i| (0..i).all(|j| self.rows[i][j].near(&self.rows[j][i], &S::feas_tol())))
    }

    /// `Some(diagonal)` when every off-diagonal entry is zero.
    pub fn as_diagonal(&self) -> Option<Vec<S>> {
        if self.rows.len() != self.cols {
            return None;
        }
        let off_zero = (0..self.cols).all(|i| (0..self.cols).all(|j| i == j || self.rows[i][j].is_zero()));
        off_zero.then(|| (0..self.cols).map(|i| self.rows[i][i].clone()).collect())
    }

    /// `L + c·𝟙𝟙ᵀ`.
    pub fn shifted(&self, c: &S) -> Self {
        Self {
            rows: self.rows.iter().map(|r| r.iter().map(|v| v.clone() + c.clone()).collect()).collect(),
            cols: self.cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game<S> {
    pub p: StrategyPolytope<S>,
    pub q: StrategyPolytope<S>,
    pub loss: LossMatrix<S>,
}

/// Solution of the matrix game over enumerated vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub value: S,
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub row_vertices: usize,
    pub col_vertices: usize,
}

/// Scale of the loss and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleSource {
    Enumerated,
    Bound,
}

impl<S: Scalar> Game<S> {
    pub fn new(p: StrategyPolytope<S>, q: StrategyPolytope<S>, loss: LossMatrix<S>) -> Result<Self> {
        if loss.n_rows() != p.dim() || loss.n_cols() != q.dim() {
            return Err(Error::Domain(format!(
                "loss matrix is {}×{} but the strategy polytopes have dimensions {} and {}",
                loss.n_rows(),
                loss.n_cols(),
                p.dim(),
                q.dim()
            )));
        }
        Ok(Self { p, q, loss })
    }

    /// The column player's best response to `x`: maximizes `xᵀLy` over `Q`.
    pub fn best_response(&self, x: &[S]) -> Result<(Vec<S>, S)> {
        check_len(self.p.dim(), x.len())?;
        self.q.linopt(&self.loss.apply_transpose(x), Sense::Max)
    }

    /// The row player's best response to `y`: minimizes `xᵀLy` over `P`.
    pub fn min_response(&self, y: &[S]) -> Result<(Vec<S>, S)> {
        check_len(self.q.dim(), y.len())?;
        self.p.linopt(&self.loss.apply(y), Sense::Min)
    }

    /// `F = max xᵀLy` over vertex pairs, by enumerating `vert(P)` when
    /// possible and otherwise bounded by `f_P(E)·max|L|·f_Q(E)`.
    pub fn loss_scale(&self) -> Result<(S, ScaleSource)> {
        match self.p.enumerate_vertices() {
            Ok(us) if us.len() <= LP_ENUMERATION_CAP => {
                let mut best: Option<S> = None;
                for u in &us {
                    let (_, v) = self.best_response(u)?;
                    best = Some(match best {
                        Some(b) => b.max_val(v),
                        None => v,
                    });
                }
                Ok((best.expect("nonempty vertex set"), ScaleSource::Enumerated))
            }
            _ => {
                let mass = |poly: &StrategyPolytope<S>| match poly {
                    StrategyPolytope::Polymatroid(f) => f.total(),
                    StrategyPolytope::Vertices { m, .. } => S::from_count(*m),
                };
                Ok((mass(&self.p) * self.loss.max_abs_entry() * mass(&self.q), ScaleSource::Bound))
            }
        }
    }

    /// Exact value of the game by solving the vertex-pair matrix game.
    pub fn lp_value_by_enumeration(&self) -> Result<LpSolution<S>> {
        let us = self.p.enumerate_vertices()?;
        let vs = self.q.enumerate_vertices()?;
        let size = us.len().saturating_mul(vs.len());
        if size > LP_ENUMERATION_CAP {
            return Err(Error::Capacity { what: "vertex-pair matrix".into(), size, cap: LP_ENUMERATION_CAP });
        }
        let r: Vec<Vec<S>> = us
            .iter()
            .map(|u| {
                let lu = self.loss.apply_transpose(u);
                vs.iter().map(|v| dot(&lu, v)).collect()
            })
            .collect();
        let (value, p, q) = matrix_game(&r);
        Ok(LpSolution {
            value,
            x: mix(&us, &p, self.p.dim()),
            y: mix(&vs, &q, self.q.dim()),
            row_vertices: us.len(),
            col_vertices: vs.len(),
        })
    }

    /// Duality-gap certificate for the marginal pair `(x, y)`.
    pub fn certify(&self, x: &[S], y: &[S], epsilon: f64, solver: &str, iterations: usize) -> Result<EquilibriumCertificate> {
        if !self.p.contains(x)? {
            return Err(Error::Precondition("x is not in the row player's polytope".into()));
        }
        if !self.q.contains(y)? {
            return Err(Error::Precondition("y is not in the column player's polytope".into()));
        }
        self.evaluate_pair(x, y, epsilon, solver, iterations)
    }

    /// Same as [`Game::certify`] without the membership checks.
    pub fn evaluate_pair(&self, x: &[S], y: &[S], epsilon: f64, solver: &str, iterations: usize) -> Result<EquilibriumCertificate> {
        check_len(self.p.dim(), x.len())?;
        check_len(self.q.dim(), y.len())?;
        let (_, primal) = self.best_response(x)?;
        let (_, dual) = self.min_response(y)?;
        let primal = primal.to_f64_lossy();
        let dual = dual.to_f64_lossy();
        let gap = primal - dual;
        Ok(EquilibriumCertificate {
            solver: solver.to_string(),
            x: x.iter().map(Scalar::to_f64_lossy).collect(),
            y: y.iter().map(Scalar::to_f64_lossy).collect(),
            value: self.loss.bilinear(x, y).to_f64_lossy(),
            primal,
            dual,
            gap,
            epsilon,
            approximate: gap <= 2.0 * epsilon,
            iterations,
            shift: 0.0,
            sne: None,
        })
    }
}

fn mix<S: Scalar>(vertices: &[Vec<S>], weights: &[S], dim: usize) -> Vec<S> {
    let mut out = vec![S::zero(); dim];
    for (v, w) in vertices.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(v) {
            *o = o.clone() + w.clone() * a.clone();
        }
    }
    out
}

/// Candidate equilibrium with both one-sided deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub solver: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `xᵀLy`.
    pub value: f64,
    /// `max_v xᵀLv`.
    pub primal: f64,
    /// `min_u uᵀLy`.
    pub dual: f64,
    pub gap: f64,
    pub epsilon: f64,
    /// `gap <= 2ε`.
    pub approximate: bool,
    pub iterations: usize,
    /// Constant added to every loss entry during solving (reported values
    /// are for the original matrix).
    pub shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sne: Option<SneConditions>,
}

impl EquilibriumCertificate {
    /// `value - gap <= λ* <= value + gap`, which holds for every valid certificate.
    pub fn brackets(&self, lambda_star: f64, tol: f64) -> bool {
        self.dual - tol <= lambda_star && lambda_star <= self.primal + tol
    }
}
