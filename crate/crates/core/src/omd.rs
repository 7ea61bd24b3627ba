//! Online mirror descent on a polymatroid base polytope, used by the row
//! player against best responses; the averaged iterates form an
//! approximate equilibrium.

use serde::{Deserialize, Serialize};

use crate::bregman::{inc_fix, MirrorMap};
use crate::error::{check_len, Error, Result};
use crate::game::{EquilibriumCertificate, Game, StrategyPolytope};
use crate::scalar::{dot, Real, Scalar};
use crate::submodular::{Sense, SubmodularOracle};

/// Vertex count up to which `max ω` and the Euclidean `G` are computed by
/// enumeration rather than bounded.
pub const OMD_ENUMERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OmdConfig {
    pub map: MirrorMap,
    /// Round count; derived from `epsilon` when absent.
    pub rounds: Option<usize>,
    /// Target average regret (and duality gap).
    pub epsilon: Option<f64>,
    /// Fixed step size; `(R/G)·√(2k/T)` when absent.
    pub eta: Option<f64>,
    pub record_trace: bool,
}

impl OmdConfig {
    pub fn new(map: MirrorMap) -> Self {
        Self { map, rounds: None, epsilon: None, eta: None, record_trace: false }
    }

    pub fn rounds(mut self, rounds: usize) -> Self {
        self.rounds = Some(rounds);
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// Constants of the regret bound `R·G·√(2T/k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdConstants {
    /// `max ω - min ω` over `B(f)`.
    pub r_squared: f64,
    /// Dual-norm bound on the loss vectors `Lv`.
    pub g: f64,
    /// Strong-convexity modulus of `ω` on `B(f)`.
    pub k: f64,
    pub eta: f64,
    pub rounds: usize,
    /// Whether `max ω` and `G` came from enumeration (otherwise bounds).
    pub exact: bool,
}

impl OmdConstants {
    /// `R·G·√(2t/k)`.
    pub fn regret_bound(&self, t: usize) -> f64 {
        self.r_squared.sqrt() * self.g * (2.0 * t as f64 / self.k).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdRound {
    pub t: usize,
    pub x: Vec<f64>,
    pub loss: Vec<f64>,
    pub instant_loss: f64,
    pub cumulative_regret: f64,
    /// Duality gap of the running averages.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmdRun {
    pub certificate: EquilibriumCertificate,
    pub constants: OmdConstants,
    /// `Σ x_tᵀℓ_t - min_x Σ xᵀℓ_t` after the last round.
    pub regret: f64,
    pub trace: Vec<OmdRound>,
}

/// `argmin_{x ∈ B(f)} ω(x)`: the projection of `0` (Euclidean) or of the
/// all-ones vector (entropy).
pub fn omega_center<T: Real>(f: &SubmodularOracle<T>, map: MirrorMap) -> Result<Vec<T>> {
    let y = match map {
        MirrorMap::Euclidean => vec![T::zero(); f.m()],
        MirrorMap::Entropy => vec![T::one(); f.m()],
    };
    Ok(inc_fix(f, map, &y)?.point)
}

/// One mirror step: move against `loss` in the dual space, then project.
pub fn omd_step<T: Real>(f: &SubmodularOracle<T>, map: MirrorMap, x_prev: &[T], loss: &[T], eta: T) -> Result<Vec<T>> {
    check_len(f.m(), x_prev.len())?;
    check_len(f.m(), loss.len())?;
    if !(eta > T::zero()) {
        return Err(Error::Config("step size must be positive".into()));
    }
    let y: Vec<T> = match map {
        MirrorMap::Euclidean => x_prev.iter().zip(loss).map(|(&x, &l)| x - eta * l).collect(),
        MirrorMap::Entropy => {
            if let Some(e) = x_prev.iter().position(|&v| !(v > T::zero())) {
                return Err(Error::Domain(format!("entropy step needs a positive iterate (index {e})")));
            }
            x_prev.iter().zip(loss).map(|(&x, &l)| x * (-eta * l).exp()).collect()
        }
    };
    Ok(inc_fix(f, map, &y)?.point)
}

/// Computes `R²`, `G`, `k`, the round budget and the step size.
pub fn omd_constants<T: Real>(game: &Game<T>, config: &OmdConfig) -> Result<OmdConstants> {
    let f = polymatroid_of(game)?;
    let map = config.map;
    let center = omega_center(f, map)?;
    let min_omega = map.omega(&center).to_f64_lossy();

    let mut exact = true;
    let max_omega = match game.p.enumerate_vertices() {
        Ok(vs) if vs.len() <= OMD_ENUMERATION_CAP => {
            vs.iter().map(|v| map.omega(v).to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => {
            exact = false;
            let singles: Vec<f64> =
                (0..f.m()).map(|e| f.evaluate(&[e]).map(|v| v.to_f64_lossy())).collect::<Result<_>>()?;
            let mass = f.total().to_f64_lossy();
            match map {
                MirrorMap::Euclidean => singles.iter().map(|s| s * s).sum::<f64>() / 2.0,
                MirrorMap::Entropy => mass * singles.iter().fold(0.0f64, |a, &s| a.max(s.ln())) - mass,
            }
        }
    };
    let r_squared = (max_omega - min_omega).max(0.0);

    let loss = &game.loss;
    let g = match map {
        // max_v ‖Lv‖∞, exactly: each row is a linear objective over Q.
        MirrorMap::Entropy => {
            let mut best = 0.0f64;
            for row in loss.rows() {
                let (_, hi) = game.q.linopt(row, Sense::Max)?;
                let (_, lo) = game.q.linopt(row, Sense::Min)?;
                best = best.max(hi.to_f64_lossy().abs()).max(lo.to_f64_lossy().abs());
            }
            best
        }
        MirrorMap::Euclidean => match game.q.enumerate_vertices() {
            Ok(vs) if vs.len() <= OMD_ENUMERATION_CAP => vs
                .iter()
                .map(|v| loss.apply(v).iter().map(|a| a.to_f64_lossy().powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            _ => {
                exact = false;
                let mut total = 0.0;
                for row in loss.rows() {
                    let (_, hi) = game.q.linopt(row, Sense::Max)?;
                    let (_, lo) = game.q.linopt(row, Sense::Min)?;
                    total += hi.to_f64_lossy().abs().max(lo.to_f64_lossy().abs()).powi(2);
                }
                total.sqrt()
            }
        },
    };

    let k = match map {
        MirrorMap::Euclidean => 1.0,
        MirrorMap::Entropy => 1.0 / f.total().to_f64_lossy(),
    };
    let rounds = match (config.rounds, config.epsilon) {
        (Some(t), _) => t,
        (None, Some(eps)) => {
            if !(eps > 0.0) {
                return Err(Error::Config("epsilon must be positive".into()));
            }
            ((2.0 * r_squared * g * g / (k * eps * eps)).ceil() as usize).max(1)
        }
        (None, None) => return Err(Error::Config("OMD needs a round count or a target epsilon".into())),
    };
    if rounds == 0 {
        return Err(Error::Config("round count must be at least 1".into()));
    }
    let eta = match config.eta {
        Some(eta) if eta > 0.0 => eta,
        Some(_) => return Err(Error::Config("step size must be positive".into())),
        None if r_squared > 0.0 && g > 0.0 => (r_squared.sqrt() / g) * (2.0 * k / rounds as f64).sqrt(),
        // Degenerate game: any step works.
        None => 1.0,
    };
    Ok(OmdConstants { r_squared, g, k, eta, rounds, exact })
}

fn polymatroid_of<T: Scalar>(game: &Game<T>) -> Result<&SubmodularOracle<T>> {
    match &game.p {
        StrategyPolytope::Polymatroid(f) => Ok(f),
        StrategyPolytope::Vertices { .. } => Err(Error::Unsupported(
            "mirror descent needs the row player's strategies to form a polymatroid base polytope".into(),
        )),
    }
}

/// Runs mirror descent for the row player against best responses and
/// certifies the averaged pair.
pub fn solve_nash_omd<T: Real>(game: &Game<T>, config: &OmdConfig) -> Result<OmdRun> {
    let constants = omd_constants(game, config)?;
    let f = polymatroid_of(game)?;
    let m = f.m();
    let n = game.q.dim();
    let eta = T::lit(constants.eta);

    let mut x = omega_center(f, config.map)?;
    let mut sum_x = vec![T::zero(); m];
    let mut sum_v = vec![T::zero(); n];
    let mut cumulative = vec![T::zero(); m];
    let mut incurred = T::zero();
    let mut trace = Vec::new();
    let mut regret = 0.0;

    for t in 1..=constants.rounds {
        let (v, _) = game.best_response(&x)?;
        let loss = game.loss.apply(&v);
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
        let (_, best_fixed) = game.p.linopt(&cumulative, Sense::Min)?;
        regret = (incurred - best_fixed).to_f64_lossy();
        if config.record_trace {
            let tt = T::from_count(t);
            let xa: Vec<T> = sum_x.iter().map(|&s| s / tt).collect();
            let va: Vec<T> = sum_v.iter().map(|&s| s / tt).collect();
            let gap = game.best_response(&xa)?.1 - game.min_response(&va)?.1;
            trace.push(OmdRound {
                t,
                x: x.iter().map(|v| v.to_f64_lossy()).collect(),
                loss: loss.iter().map(|v| v.to_f64_lossy()).collect(),
                instant_loss: instant.to_f64_lossy(),
                cumulative_regret: regret,
                gap: gap.to_f64_lossy(),
            });
        }
        if t < constants.rounds {
            x = omd_step(f, config.map, &x, &loss, eta)?;
        }
    }

    let tt = T::from_count(constants.rounds);
    let x_bar: Vec<T> = sum_x.iter().map(|&s| s / tt).collect();
    let v_bar: Vec<T> = sum_v.iter().map(|&s| s / tt).collect();
    let epsilon = config.epsilon.unwrap_or(constants.regret_bound(constants.rounds) / constants.rounds as f64);
    let solver = format!("omd-{}", config.map.name());
    let certificate = game.certify(&x_bar, &v_bar, epsilon, &solver, constants.rounds)?;
    Ok(OmdRun { certificate, constants, regret, trace })
}
