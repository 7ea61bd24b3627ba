mod runner;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand};

use mspgame::game::StrategyPolytope;
use runner::{execute, load_game, write_outputs, MapArg, RunSpec, Solver};

#[derive(Parser)]
#[command(name = "mspgame", version, about = "Solve zero-sum games over combinatorial polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one game and write certificate.json and trace.csv.
    Run {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum)]
        solver: Solver,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Overrides the solver's round budget.
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_enum, default_value = "entropy")]
        map: MapArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        approx_marginal: Option<f64>,
        #[arg(long)]
        approx_response: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several run files on the same game and print a CSV summary.
    Compare {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Print the vertex count and uniform marginals of the row polytope.
    Count {
        #[arg(long)]
        game: PathBuf,
        /// Also draw this many uniform samples.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit status: 0 success, 1 bad input, 2 budget exhausted with gap above epsilon.
fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run { game, solver, epsilon, rounds, map, seed, approx_marginal, approx_response, out } => {
            let spec = RunSpec { game, solver, epsilon, rounds, map, seed, approx_marginal, approx_response };
            let (_, g) = load_game(&spec.game)?;
            let outcome = execute(&spec, &g, out.is_some())?;
            if let Some(dir) = &out {
                write_outputs(dir, &outcome)?;
            }
            let c = &outcome.certificate;
            println!("solver={} rounds={} value={} gap={} epsilon={}", c.solver, outcome.rounds, c.value, c.gap, c.epsilon);
            Ok(if outcome.converged { 0 } else { 2 })
        }
        Command::Compare { specs } => {
            if specs.len() < 2 {
                bail!("compare needs at least two run specs");
            }
            let runs = specs.iter().map(|p| RunSpec::load(p)).collect::<Result<Vec<_>>>()?;
            let (first, game) = load_game(&runs[0].game)?;
            for r in &runs[1..] {
                let (other, _) = load_game(&r.game)?;
                if other != first {
                    bail!("{} describes a different game than {}", r.game.display(), runs[0].game.display());
                }
            }
            println!("solver,rounds,wall_ms,gap,value");
            for r in &runs {
                let start = Instant::now();
                let outcome = execute(r, &game, false)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                let c = &outcome.certificate;
                println!("{},{},{:.3},{},{}", c.solver, outcome.rounds, ms, c.gap, c.value);
            }
            Ok(0)
        }
        Command::Count { game, samples, seed } => {
            let (_, g) = load_game(&game)?;
            let oracle = g.p.counting_oracle().map_err(|e| anyhow!("{e}"))?;
            let ones = vec![1.0f64; oracle.m()];
            let z: f64 = oracle.partition_function(&ones).map_err(|e| anyhow!("{e}"))?;
            let marg = oracle.marginals(&ones).map_err(|e| anyhow!("{e}"))?;
            println!("count={z}");
            println!("marginals={}", join(&marg));
            if let StrategyPolytope::Polymatroid(f) = &g.p {
                println!("rank={}", f.total());
            }
            for i in 0..samples {
                let s = oracle.sample(&ones, seed.wrapping_add(i as u64)).map_err(|e| anyhow!("{e}"))?;
                let idx: Vec<String> = s.iter().enumerate().filter(|(_, &b)| b).map(|(e, _)| e.to_string()).collect();
                println!("sample={}", idx.join(" "));
            }
            Ok(0)
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}
