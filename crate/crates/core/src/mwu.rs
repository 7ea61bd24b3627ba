//! Multiplicative weights for the row player, run implicitly on a product
//! distribution over the vertices of `P`. Updating `λ_e ← λ_e·β^{ℓ_e/F}`
//! multiplies every vertex weight by `β^{uᵀℓ/F}`, so only `m` multipliers
//! are stored and the counting oracle supplies the marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counting::{CountingOracle, NoisyOracle};
use crate::error::{check_len, Error, Result};
use crate::game::{EquilibriumCertificate, Game, LossMatrix};
use crate::scalar::{dot, Real};
use crate::submodular::Sense;

/// Multipliers are rescaled by their geometric mean past this max/min ratio.
pub const RESCALE_RATIO: f64 = 1e12;

/// Approximate-oracle settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    /// Additive error bound on each marginal.
    pub marginal: f64,
    /// Suboptimality bound of each best response.
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuConfig {
    pub epsilon: f64,
    /// Overrides the round budget `⌈F² ln|U| / ε²⌉`.
    pub rounds: Option<usize>,
    pub approx: Option<Approximation>,
    pub seed: u64,
    pub record_trace: bool,
}

impl MwuConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, rounds: None, approx: None, seed: 0, record_trace: false }
    }

    pub fn rounds(mut self, rounds: usize) -> Self {
        self.rounds = Some(rounds);
        self
    }

    pub fn approx(mut self, marginal: f64, response: f64) -> Self {
        self.approx = Some(Approximation { marginal, response });
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// `β = 1 / (1 + √2·ε/F)`.
pub fn beta_for(epsilon: f64, scale: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(scale > 0.0) {
        return Err(Error::Config(format!("need ε > 0 and F > 0 (got ε={epsilon}, F={scale})")));
    }
    Ok(1.0 / (1.0 + 2f64.sqrt() * epsilon / scale))
}

/// `⌈F² ln|U| / ε²⌉`, at least one.
pub fn round_budget(epsilon: f64, scale: f64, log_count: f64) -> usize {
    ((scale * scale * log_count / (epsilon * epsilon)).ceil() as usize).max(1)
}

/// `λ'_e = λ_e · β^{loss_e / F}`.
pub fn mwu_update<T: Real>(lambda: &[T], loss: &[T], beta: T, scale: T) -> Result<Vec<T>> {
    check_len(lambda.len(), loss.len())?;
    if !(beta > T::zero() && beta < T::one()) {
        return Err(Error::Config("β must lie in (0, 1)".into()));
    }
    if !(scale > T::zero()) {
        return Err(Error::Config("loss scale must be positive".into()));
    }
    let log_beta = beta.ln();
    Ok(lambda.iter().zip(loss).map(|(&l, &d)| l * (log_beta * d / scale).exp()).collect())
}

/// Divides by the geometric mean when the spread exceeds [`RESCALE_RATIO`].
/// Marginals are invariant under this.
pub fn rescale<T: Real>(lambda: &mut [T]) {
    let (lo, hi) = lambda.iter().fold((T::infinity(), T::zero()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi / lo > T::lit(RESCALE_RATIO) {
        let mean_log = lambda.iter().fold(T::zero(), |acc, v| acc + v.ln()) / T::from_count(lambda.len());
        let g = mean_log.exp();
        for v in lambda.iter_mut() {
            *v = *v / g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuRound {
    pub t: usize,
    pub lambda: Vec<f64>,
    /// Marginal estimate used this round.
    pub x: Vec<f64>,
    /// Best response played against it.
    pub v: Vec<f64>,
    pub instant_loss: f64,
    /// Duality gap of the running averages (original loss matrix).
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuRun {
    pub certificate: EquilibriumCertificate,
    pub beta: f64,
    /// `F` for the (shifted) loss.
    pub scale: f64,
    pub epsilon_prime: f64,
    pub rounds: usize,
    pub log_count: f64,
    /// Average of `x̃_tᵀL'ṽ_t` over rounds.
    pub average_loss: f64,
    /// `min_x (1/T) Σ xᵀL'ṽ_t`.
    pub best_fixed_average: f64,
    pub trace: Vec<MwuRound>,
}

impl MwuRun {
    pub fn average_regret(&self) -> f64 {
        self.average_loss - self.best_fixed_average
    }

    /// `√2·ε′F + ε′²F`.
    pub fn regret_bound(&self) -> f64 {
        2f64.sqrt() * self.epsilon_prime * self.scale + self.epsilon_prime.powi(2) * self.scale
    }
}

/// Uses the counting oracle implied by `P`.
pub fn solve_nash_mwu_auto<T: Real>(game: &Game<T>, config: &MwuConfig) -> Result<MwuRun> {
    let oracle = game.p.counting_oracle()?;
    solve_nash_mwu(game, &oracle, config)
}

pub fn solve_nash_mwu<T: Real>(game: &Game<T>, oracle: &CountingOracle, config: &MwuConfig) -> Result<MwuRun> {
    let m = game.p.dim();
    if oracle.m() != m {
        return Err(Error::Integrity(format!(
            "counting oracle has {} elements but the row polytope has dimension {m}",
            oracle.m()
        )));
    }
    if !(config.epsilon > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let approx = config.approx.unwrap_or(Approximation { marginal: 0.0, response: 0.0 });
    if !(approx.marginal >= 0.0 && approx.response >= 0.0) {
        return Err(Error::Config("approximation errors must be nonnegative".into()));
    }

    // Nonnegative losses keep the regret analysis valid; shift otherwise.
    let min_entry = game.loss.min_entry();
    let shift = if min_entry < T::zero() { -min_entry } else { T::zero() };
    let shifted = if shift > T::zero() {
        Game::new(game.p.clone(), game.q.clone(), game.loss.shifted(&shift))?
    } else {
        game.clone()
    };
    let (scale_t, _) = shifted.loss_scale()?;
    let scale = scale_t.to_f64_lossy();
    let log_count = oracle.log_count()?;
    let q_mass = max_vertex_mass(&shifted)?;

    let first: Vec<T> = oracle.marginals(&vec![T::one(); m])?;
    if !game.p.contains(&first)? {
        return Err(Error::Integrity("counting oracle marginals fall outside the row polytope".into()));
    }

    let degenerate = scale <= 0.0;
    let (beta, eps_prime, rounds) = if degenerate {
        (0.5, 0.0, 1)
    } else {
        let rounds = config.rounds.unwrap_or_else(|| round_budget(config.epsilon, scale, log_count));
        (beta_for(config.epsilon, scale)?, config.epsilon / scale, rounds)
    };
    if rounds == 0 {
        return Err(Error::Config("round count must be at least 1".into()));
    }

    let noisy = NoisyOracle::new(oracle.clone(), approx.marginal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = game.q.dim();
    let mut lambda = vec![T::one(); m];
    let mut sum_x = vec![T::zero(); m];
    let mut sum_v = vec![T::zero(); n];
    let mut cumulative = vec![T::zero(); m];
    let mut incurred = T::zero();
    let mut trace = Vec::new();
    let beta_t = T::lit(beta);

    for t in 1..=rounds {
        let x = noisy.marginals(&lambda, &mut rng)?;
        let v = slack_response(&shifted, &x, approx.response, q_mass, &mut rng)?;
        let loss = shifted.loss.apply(&v);
        let instant = dot(&x, &loss);
        incurred = incurred + instant;
        for (c, &l) in cumulative.iter_mut().zip(&loss) {
            *c = *c + l;
        }
        for (s, &a) in sum_x.iter_mut().zip(&x) {
            *s = *s + a;
        }
        for (s, &a) in sum_v.iter_mut().zip(&v) {
            *s = *s + a;
        }
        if config.record_trace {
            let tt = T::from_count(t);
            let xa: Vec<T> = sum_x.iter().map(|&s| s / tt).collect();
            let va: Vec<T> = sum_v.iter().map(|&s| s / tt).collect();
            let gap = game.best_response(&xa)?.1 - game.min_response(&va)?.1;
            trace.push(MwuRound {
                t,
                lambda: lambda.iter().map(|v| v.to_f64_lossy()).collect(),
                x: x.iter().map(|v| v.to_f64_lossy()).collect(),
                v: v.iter().map(|v| v.to_f64_lossy()).collect(),
                instant_loss: instant.to_f64_lossy(),
                gap: gap.to_f64_lossy(),
            });
        }
        if !degenerate {
            lambda = mwu_update(&lambda, &loss, beta_t, scale_t)?;
            rescale(&mut lambda);
        }
    }

    let tt = T::from_count(rounds);
    let x_bar: Vec<T> = sum_x.iter().map(|&s| s / tt).collect();
    let v_bar: Vec<T> = sum_v.iter().map(|&s| s / tt).collect();
    let (_, best_fixed) = shifted.p.linopt(&cumulative, Sense::Min)?;
    let solver = if config.approx.is_some() { "mwu-approx" } else { "mwu" };
    let mut certificate = if approx.marginal > 0.0 {
        // Averages of noisy estimates need not lie in P; report the gap as is.
        game.evaluate_pair(&x_bar, &v_bar, config.epsilon, solver, rounds)?
    } else {
        game.certify(&x_bar, &v_bar, config.epsilon, solver, rounds)?
    };
    certificate.shift = shift.to_f64_lossy();
    Ok(MwuRun {
        certificate,
        beta,
        scale,
        epsilon_prime: eps_prime,
        rounds,
        log_count,
        average_loss: (incurred / tt).to_f64_lossy(),
        best_fixed_average: (best_fixed / tt).to_f64_lossy(),
        trace,
    })
}

/// Largest `‖v‖₁` over the column player's vertices.
fn max_vertex_mass<T: Real>(game: &Game<T>) -> Result<T> {
    let ones = vec![T::one(); game.q.dim()];
    Ok(game.q.linopt(&ones, Sense::Max)?.1)
}

/// A response within `slack` of the best: the exact best response to
/// weights perturbed entrywise by at most `slack / (2·max‖v‖₁)`.
fn slack_response<T: Real, R: Rng>(game: &Game<T>, x: &[T], slack: f64, q_mass: T, rng: &mut R) -> Result<Vec<T>> {
    let mut w = game.loss.apply_transpose(x);
    if slack > 0.0 && q_mass > T::zero() {
        let radius = slack / (2.0 * q_mass.to_f64_lossy());
        for v in w.iter_mut() {
            *v = *v + T::lit(rng.gen_range(-radius..=radius));
        }
    }
    Ok(game.q.linopt(&w, Sense::Max)?.0)
}

/// Exposes the loss matrix shift used for games with negative entries.
pub fn shifted_loss<T: Real>(loss: &LossMatrix<T>) -> (LossMatrix<T>, T) {
    let min_entry = loss.min_entry();
    if min_entry < T::zero() {
        (loss.shifted(&-min_entry), -min_entry)
    } else {
        (loss.clone(), T::zero())
    }
}
