//! Mirror maps, Bregman divergences and Inc-Fix projections onto `B(f)`.
//!
//! Inc-Fix keeps a point `x ∈ P(f)` below the projection, repeatedly raises
//! the gradient of the lowest non-fixed level set `M` until either a
//! constraint binds (the elements of `M` that became tight are fixed) or the
//! level meets the next one (which joins `M`).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::scalar::{Real, Scalar};
use crate::submodular::{GroundSet, SubmodularOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorMap {
    /// `ω(x) = ½‖x‖²` on all of `Rᵐ`.
    Euclidean,
    /// `ω(x) = Σ x ln x - x` on the positive orthant.
    Entropy,
}

impl MirrorMap {
    pub fn name(self) -> &'static str {
        match self {
            MirrorMap::Euclidean => "euclidean",
            MirrorMap::Entropy => "entropy",
        }
    }

    pub fn omega<T: Real>(self, x: &[T]) -> T {
        match self {
            MirrorMap::Euclidean => x.iter().fold(T::zero(), |acc, &v| acc + v * v) / T::lit(2.0),
            MirrorMap::Entropy => x.iter().fold(T::zero(), |acc, &v| acc + xlnx(v) - v),
        }
    }

    pub fn gradient<T: Real>(self, x: &[T]) -> Result<Vec<T>> {
        match self {
            MirrorMap::Euclidean => Ok(x.to_vec()),
            MirrorMap::Entropy => {
                require_positive(x, "entropy gradient")?;
                Ok(x.iter().map(|v| v.ln()).collect())
            }
        }
    }

    pub fn inverse_gradient<T: Real>(self, g: &[T]) -> Vec<T> {
        match self {
            MirrorMap::Euclidean => g.to_vec(),
            MirrorMap::Entropy => g.iter().map(|v| v.exp()).collect(),
        }
    }

    /// `D(x, y) = ω(x) - ω(y) - ∇ω(y)ᵀ(x - y)`.
    pub fn divergence<T: Real>(self, x: &[T], y: &[T]) -> Result<T> {
        check_len(x.len(), y.len())?;
        match self {
            MirrorMap::Euclidean => {
                Ok(x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)) / T::lit(2.0))
            }
            MirrorMap::Entropy => {
                require_positive(y, "entropy divergence reference point")?;
                if x.iter().any(|&v| v < T::zero()) {
                    return Err(Error::Domain("entropy divergence needs x >= 0".into()));
                }
                Ok(x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
                    let t = if a == T::zero() { T::zero() } else { a * (a / b).ln() };
                    acc + t - a + b
                }))
            }
        }
    }
}

fn xlnx<T: Real>(v: T) -> T {
    if v == T::zero() {
        T::zero()
    } else {
        v * v.ln()
    }
}

fn require_positive<T: Real>(y: &[T], what: &str) -> Result<()> {
    if let Some(e) = y.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::Domain(format!("{what} requires positive finite entries (index {e})")));
    }
    Ok(())
}

/// Separable strictly convex objective over `B(f)` whose minimizer Inc-Fix
/// computes. Raising the gradient of an element by `gain` is realized by
/// moving `step_for_gain(gain)` along `direction`.
pub trait Separable<S: Scalar> {
    fn grad(&self, e: usize, x: &S) -> S;
    fn direction(&self, e: usize, x: &S) -> S;
    fn gain_for_step(&self, step: &S) -> S;
    fn step_for_gain(&self, gain: &S) -> S;
    /// A point of `P(f)` lying componentwise below the minimizer.
    fn start(&self, f: &SubmodularOracle<S>) -> Result<Vec<S>>;
}

/// `½‖x - y‖²`.
pub struct EuclideanTarget<'a, S>(pub &'a [S]);

impl<S: Scalar> Separable<S> for EuclideanTarget<'_, S> {
    fn grad(&self, e: usize, x: &S) -> S {
        x.clone() - self.0[e].clone()
    }
    fn direction(&self, _: usize, _: &S) -> S {
        S::one()
    }
    fn gain_for_step(&self, step: &S) -> S {
        step.clone()
    }
    fn step_for_gain(&self, gain: &S) -> S {
        gain.clone()
    }
    fn start(&self, f: &SubmodularOracle<S>) -> Result<Vec<S>> {
        Ok(vec![S::zero(); f.m()])
    }
}

/// Unnormalized KL divergence `D(x, y)` for a positive target `y`.
pub struct EntropyTarget<'a, T>(pub &'a [T]);

impl<T: Real> Separable<T> for EntropyTarget<'_, T> {
    fn grad(&self, e: usize, x: &T) -> T {
        (*x / self.0[e]).ln()
    }
    fn direction(&self, _: usize, x: &T) -> T {
        *x
    }
    fn gain_for_step(&self, step: &T) -> T {
        step.ln_1p()
    }
    fn step_for_gain(&self, gain: &T) -> T {
        gain.exp_m1()
    }
    fn start(&self, f: &SubmodularOracle<T>) -> Result<Vec<T>> {
        let c = f.line_search(&vec![T::zero(); f.m()], self.0)?;
        let scale = c * T::lit(0.5);
        Ok(self.0.iter().map(|&v| v * scale).collect())
    }
}

/// `Σ x_e² / (2 w_e)`; its minimizer over `B(f)` is the lexicographically
/// optimal base for the weights `w`.
pub struct WeightedSquares<'a, S>(pub &'a [S]);

impl<S: Scalar> Separable<S> for WeightedSquares<'_, S> {
    fn grad(&self, e: usize, x: &S) -> S {
        x.clone() / self.0[e].clone()
    }
    fn direction(&self, e: usize, _: &S) -> S {
        self.0[e].clone()
    }
    fn gain_for_step(&self, step: &S) -> S {
        step.clone()
    }
    fn step_for_gain(&self, gain: &S) -> S {
        gain.clone()
    }
    fn start(&self, f: &SubmodularOracle<S>) -> Result<Vec<S>> {
        Ok(vec![S::zero(); f.m()])
    }
}

/// One pass of the inner loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncFixStep<S> {
    pub iteration: usize,
    /// The minimum-level set `M` whose gradient was raised.
    pub raised: Vec<usize>,
    /// Elements fixed at the end of this pass (empty if `M` merely grew).
    pub fixed: Vec<usize>,
    /// Gradient increase applied to `M`.
    pub epsilon: S,
    /// Gradient level of `M` after the increase.
    pub level: S,
    pub point: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult<S> {
    pub point: Vec<S>,
    /// Blocks in the order they were fixed.
    pub blocks: Vec<Vec<usize>>,
    /// Gradient level of each block, strictly increasing.
    pub levels: Vec<S>,
    pub steps: Vec<IncFixStep<S>>,
}

impl<S: Scalar> ProjectionResult<S> {
    /// Number of fixing rounds.
    pub fn outer_iterations(&self) -> usize {
        self.blocks.len()
    }

    pub fn report(&self, ground: &GroundSet) -> ProjectionReport {
        ProjectionReport {
            point: self.point.iter().map(Scalar::to_f64_lossy).collect(),
            partition: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&e| ground.label(e).to_string()).collect())
                .collect(),
            levels: self.levels.iter().map(Scalar::to_f64_lossy).collect(),
            trace: self
                .steps
                .iter()
                .map(|s| TraceEntry {
                    iteration: s.iteration,
                    fixed: s.fixed.iter().map(|&e| ground.label(e).to_string()).collect(),
                    epsilon: s.epsilon.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub point: Vec<f64>,
    pub partition: Vec<Vec<String>>,
    pub levels: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub fixed: Vec<String>,
    pub epsilon: f64,
}

/// Bregman projection of `y` onto `B(f)` under `map`.
pub fn inc_fix<T: Real>(f: &SubmodularOracle<T>, map: MirrorMap, y: &[T]) -> Result<ProjectionResult<T>> {
    check_len(f.m(), y.len())?;
    match map {
        MirrorMap::Euclidean => {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("projection target must be finite".into()));
            }
            minimize_separable(f, &EuclideanTarget(y))
        }
        MirrorMap::Entropy => {
            require_positive(y, "entropy projection target")?;
            minimize_separable(f, &EntropyTarget(y))
        }
    }
}

/// Euclidean projection over any scalar; exact for rationals.
pub fn project_euclidean<S: Scalar>(f: &SubmodularOracle<S>, y: &[S]) -> Result<ProjectionResult<S>> {
    check_len(f.m(), y.len())?;
    minimize_separable(f, &EuclideanTarget(y))
}

/// Runs Inc-Fix for an arbitrary separable objective.
pub fn minimize_separable<S: Scalar, O: Separable<S>>(f: &SubmodularOracle<S>, obj: &O) -> Result<ProjectionResult<S>> {
    let m = f.m();
    let mut x = obj.start(f)?;
    let mut fixed = vec![false; m];
    let mut blocks = Vec::new();
    let mut levels = Vec::new();
    let mut steps = Vec::new();
    let tol = S::level_tol();
    let cap = 4 * m;

    while fixed.iter().any(|&b| !b) {
        let iteration = steps.len() + 1;
        if iteration > cap {
            return Err(Error::Internal(format!("Inc-Fix exceeded {cap} iterations")));
        }
        let free: Vec<usize> = (0..m).filter(|&e| !fixed[e]).collect();
        let grads: Vec<S> = free.iter().map(|&e| obj.grad(e, &x[e])).collect();
        let low = grads.iter().skip(1).fold(grads[0].clone(), |a, g| a.min_val(g.clone()));
        let mut raised = Vec::new();
        let mut next: Option<S> = None;
        for (&e, g) in free.iter().zip(&grads) {
            if *g <= low.clone() + tol.clone() {
                raised.push(e);
            } else {
                next = Some(match next {
                    Some(n) => n.min_val(g.clone()),
                    None => g.clone(),
                });
            }
        }

        let mut d = vec![S::zero(); m];
        for &e in &raised {
            d[e] = obj.direction(e, &x[e]);
        }
        let step1 = f.line_search(&x, &d)?;
        let gain1 = obj.gain_for_step(&step1);
        let (gain, step, binds) = match next {
            Some(n) if n.clone() - low.clone() < gain1 => {
                let gain2 = n - low.clone();
                let step2 = obj.step_for_gain(&gain2);
                (gain2, step2, false)
            }
            _ => (gain1, step1, true),
        };
        for &e in &raised {
            x[e] = x[e].clone() + step.clone() * d[e].clone();
        }

        let mut newly_fixed = Vec::new();
        if binds {
            // Tight elements already sitting at the new level are fixed with it.
            let tight = f.max_tight_set(&x)?;
            let level = low.clone() + gain.clone() + tol.clone();
            newly_fixed = free
                .iter()
                .copied()
                .filter(|&e| tight.binary_search(&e).is_ok() && obj.grad(e, &x[e]) <= level)
                .collect();
            if newly_fixed.is_empty() {
                return Err(Error::Internal("Inc-Fix line search did not produce a tight element".into()));
            }
            for &e in &newly_fixed {
                fixed[e] = true;
            }
            blocks.push(newly_fixed.clone());
            levels.push(low.clone() + gain.clone());
        }
        steps.push(IncFixStep {
            iteration,
            raised,
            fixed: newly_fixed,
            epsilon: gain.clone(),
            level: low + gain,
            point: x.clone(),
        });
    }
    Ok(ProjectionResult { point: x, blocks, levels, steps })
}

/// Outcome of the face-condition test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderCheck<S> {
    pub optimal: bool,
    /// Level sets of `∇ω(x) - ∇ω(y)` in increasing order.
    pub blocks: Vec<Vec<usize>>,
    pub levels: Vec<S>,
    /// Index of the first prefix `F₁ ∪ … ∪ Fᵢ` that is not tight.
    pub failing_prefix: Option<usize>,
}

/// Checks that `x ∈ B(f)` lies in the optimal face for projecting `y`:
/// every prefix of the gradient level sets must be tight.
pub fn verify_first_order<T: Real>(
    f: &SubmodularOracle<T>,
    map: MirrorMap,
    y: &[T],
    x: &[T],
) -> Result<FirstOrderCheck<T>> {
    check_len(f.m(), y.len())?;
    check_len(f.m(), x.len())?;
    if !f.is_member(x, true)? {
        return Err(Error::Precondition("verify_first_order requires x ∈ B(f)".into()));
    }
    let grads: Vec<T> = match map {
        MirrorMap::Euclidean => x.iter().zip(y).map(|(&a, &b)| a - b).collect(),
        MirrorMap::Entropy => {
            require_positive(y, "entropy reference point")?;
            x.iter()
                .zip(y)
                .map(|(&a, &b)| if a > T::zero() { (a / b).ln() } else { T::neg_infinity() })
                .collect()
        }
    };
    let (blocks, levels) = level_sets(&grads, T::level_tol());
    let tol = T::feas_tol();
    let mut chosen = vec![false; f.m()];
    let mut failing_prefix = None;
    for (i, block) in blocks.iter().enumerate() {
        for &e in block {
            chosen[e] = true;
        }
        let load = x.iter().zip(&chosen).filter(|(_, &c)| c).fold(T::zero(), |acc, (&v, _)| acc + v);
        if f.eval_indicator(&chosen) - load > tol {
            failing_prefix = Some(i);
            break;
        }
    }
    Ok(FirstOrderCheck { optimal: failing_prefix.is_none(), blocks, levels, failing_prefix })
}

/// Groups values into level sets: sorted ascending, consecutive values within
/// `tol` share a level. Each level reports its smallest value.
pub fn level_sets<S: Scalar>(values: &[S], tol: S) -> (Vec<Vec<usize>>, Vec<S>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut levels: Vec<S> = Vec::new();
    let mut prev: Option<S> = None;
    for e in order {
        let v = values[e].clone();
        let joins = prev.as_ref().is_some_and(|p| v.clone() - p.clone() <= tol);
        if joins {
            blocks.last_mut().expect("open block").push(e);
        } else {
            blocks.push(vec![e]);
            levels.push(v.clone());
        }
        prev = Some(v);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    (blocks, levels)
}
