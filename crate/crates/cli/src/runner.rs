use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use mspgame::bregman::MirrorMap;
use mspgame::game::{EquilibriumCertificate, StrategyPolytope};
use mspgame::io::GameSpec;
use mspgame::mwu::{solve_nash_mwu_auto, MwuConfig};
use mspgame::omd::{solve_nash_omd, OmdConfig};
use mspgame::sne::{check_sne, lex_optimal_base, search_symmetric_equilibria, solve_sne_diagonal};
use mspgame::submodular::Sense;
use mspgame::MspGame;

/// Random restarts for the symmetric-equilibrium search on non-diagonal losses.
const SNE_RESTARTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Omd,
    Mwu,
    Sne,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MapArg {
    Euclidean,
    Entropy,
}

impl From<MapArg> for MirrorMap {
    fn from(m: MapArg) -> Self {
        match m {
            MapArg::Euclidean => MirrorMap::Euclidean,
            MapArg::Entropy => MirrorMap::Entropy,
        }
    }
}

/// Everything one solver invocation needs. Also the file format read by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub game: PathBuf,
    pub solver: Solver,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default = "default_map")]
    pub map: MapArg,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub approx_marginal: Option<f64>,
    #[serde(default)]
    pub approx_response: Option<f64>,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_map() -> MapArg {
    MapArg::Entropy
}

impl RunSpec {
    /// Reads a run file; a relative `game` path is taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut spec: RunSpec =
            serde_json::from_str(&text).with_context(|| format!("invalid run spec {}", path.display()))?;
        if spec.game.is_relative() {
            if let Some(dir) = path.parent() {
                spec.game = dir.join(&spec.game);
            }
        }
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            bail!("--epsilon must be a positive number");
        }
        if self.rounds == Some(0) {
            bail!("--rounds must be at least 1");
        }
        if (self.approx_marginal.is_some() || self.approx_response.is_some()) && self.solver != Solver::Mwu {
            bail!("--approx-marginal and --approx-response only apply to the mwu solver");
        }
        for v in [self.approx_marginal, self.approx_response].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("approximation errors must be nonnegative");
            }
        }
        Ok(())
    }
}

pub struct Outcome {
    pub certificate: EquilibriumCertificate,
    pub rounds: usize,
    /// Header plus rows.
    pub trace: String,
    pub converged: bool,
}

pub fn load_game(path: &Path) -> Result<(GameSpec, MspGame)> {
    let spec = GameSpec::load(path).map_err(|e| anyhow!("{e}"))?;
    let game = spec.build().map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((spec, game))
}

pub fn execute(spec: &RunSpec, game: &MspGame, trace: bool) -> Result<Outcome> {
    spec.validate()?;
    let eps = spec.epsilon;
    match spec.solver {
        Solver::Omd => {
            if !matches!(game.p, StrategyPolytope::Polymatroid(_)) {
                bail!("solver omd needs a polymatroid row polytope; the game lists explicit vertices");
            }
            let mut config = OmdConfig::new(spec.map.into()).epsilon(eps);
            if let Some(t) = spec.rounds {
                config = config.rounds(t);
            }
            if trace {
                config = config.with_trace();
            }
            let run = solve_nash_omd(game, &config).map_err(|e| anyhow!("{e}"))?;
            let m = game.p.dim();
            let mut csv = String::from("t");
            push_cols(&mut csv, "x", m);
            push_cols(&mut csv, "loss", m);
            csv.push_str(",instant_loss,cumulative_regret,gap\n");
            for r in &run.trace {
                write!(csv, "{}", r.t).unwrap();
                push_vals(&mut csv, &r.x);
                push_vals(&mut csv, &r.loss);
                writeln!(csv, ",{},{},{}", r.instant_loss, r.cumulative_regret, r.gap).unwrap();
            }
            let converged = run.certificate.gap <= eps;
            Ok(Outcome { rounds: run.constants.rounds, certificate: run.certificate, trace: csv, converged })
        }
        Solver::Mwu => {
            let mut config = MwuConfig::new(eps).seed(spec.seed);
            if let Some(t) = spec.rounds {
                config = config.rounds(t);
            }
            if spec.approx_marginal.is_some() || spec.approx_response.is_some() {
                config = config.approx(spec.approx_marginal.unwrap_or(0.0), spec.approx_response.unwrap_or(0.0));
            }
            if trace {
                config = config.with_trace();
            }
            let run = solve_nash_mwu_auto(game, &config).map_err(|e| anyhow!("{e}"))?;
            let (m, n) = (game.p.dim(), game.q.dim());
            let mut csv = String::from("t");
            push_cols(&mut csv, "lambda", m);
            push_cols(&mut csv, "x", m);
            push_cols(&mut csv, "v", n);
            csv.push_str(",instant_loss,gap\n");
            for r in &run.trace {
                write!(csv, "{}", r.t).unwrap();
                push_vals(&mut csv, &r.lambda);
                push_vals(&mut csv, &r.x);
                push_vals(&mut csv, &r.v);
                writeln!(csv, ",{},{}", r.instant_loss, r.gap).unwrap();
            }
            let converged = run.certificate.gap <= eps;
            Ok(Outcome { rounds: run.rounds, certificate: run.certificate, trace: csv, converged })
        }
        Solver::Lp => {
            let lp = game.lp_value_by_enumeration().map_err(|e| anyhow!("{e}"))?;
            let cert = game.certify(&lp.x, &lp.y, eps, "lp", 1).map_err(|e| anyhow!("{e}"))?;
            Ok(Outcome { rounds: 1, trace: summary_trace(&cert), certificate: cert, converged: true })
        }
        Solver::Sne => {
            let f = match (&game.p, &game.q) {
                (StrategyPolytope::Polymatroid(f), StrategyPolytope::Polymatroid(g)) if f == g => f,
                _ => bail!("solver sne needs both players on the same polymatroid"),
            };
            if !f.is_matroid() {
                bail!("solver sne needs a matroid rank function");
            }
            let verdict_x = if game.loss.as_diagonal().is_some() {
                let (x, verdict) = solve_sne_diagonal(f, &game.loss).map_err(|e| anyhow!("{e}"))?;
                match x {
                    Some(x) => (x, verdict),
                    None => {
                        // Report the only candidate; its conditions say why it fails.
                        let w: Vec<f64> = game.loss.as_diagonal().unwrap().iter().map(|d| 1.0 / d).collect();
                        (lex_optimal_base(f, &w).map_err(|e| anyhow!("{e}"))?, verdict)
                    }
                }
            } else {
                let found =
                    search_symmetric_equilibria(f, &game.loss, SNE_RESTARTS, spec.seed).map_err(|e| anyhow!("{e}"))?;
                let x = match found.into_iter().next() {
                    Some(x) => x,
                    None => f.greedy(&vec![0.0; f.m()], Sense::Min).map_err(|e| anyhow!("{e}"))?,
                };
                let verdict = check_sne(f, &game.loss, &x).map_err(|e| anyhow!("{e}"))?;
                (x, verdict)
            };
            let (x, verdict) = verdict_x;
            let mut cert = game.certify(&x, &x, eps, "sne", 1).map_err(|e| anyhow!("{e}"))?;
            cert.sne = Some(verdict.conditions);
            Ok(Outcome { rounds: 1, trace: summary_trace(&cert), certificate: cert, converged: true })
        }
    }
}

fn push_cols(csv: &mut String, name: &str, n: usize) {
    for i in 0..n {
        write!(csv, ",{name}_{i}").unwrap();
    }
}

fn push_vals(csv: &mut String, vals: &[f64]) {
    for v in vals {
        write!(csv, ",{v}").unwrap();
    }
}

fn summary_trace(cert: &EquilibriumCertificate) -> String {
    format!("t,value,primal,dual,gap\n1,{},{},{},{}\n", cert.value, cert.primal, cert.dual, cert.gap)
}

pub fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let json = serde_json::to_string_pretty(&outcome.certificate)? + "\n";
    std::fs::write(dir.join("certificate.json"), json)?;
    std::fs::write(dir.join("trace.csv"), &outcome.trace)?;
    Ok(())
}
