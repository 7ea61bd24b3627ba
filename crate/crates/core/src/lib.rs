pub mod bregman;
pub mod counting;
pub mod error;
pub mod game;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod mwu;
pub mod omd;
pub mod scalar;
pub mod sne;
pub mod submodular;

pub use error::{Error, Result};
pub use graph::Graph;
pub use scalar::{ratio, Rational, Real, Scalar};

/// Double-precision instantiations.
pub type Oracle = submodular::SubmodularOracle<f64>;
pub type Polytope = game::StrategyPolytope<f64>;
pub type Loss = game::LossMatrix<f64>;
pub type MspGame = game::Game<f64>;

/// Exact instantiations.
pub type ExactOracle = submodular::SubmodularOracle<Rational>;
pub type ExactGame = game::Game<Rational>;
