//! JSON game descriptions.
//!
//! ```json
//! { "p": { "kind": "graphic", "edges": [[0,1],[1,2],[0,2]] },
//!   "loss": { "identity": 3 } }
//! ```
//!
//! `q` defaults to `p`. The loss is a dense row list, `{"identity": m}` or
//! `{"diagonal": [...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, LossMatrix, StrategyPolytope};
use crate::graph::Graph;
use crate::submodular::SubmodularOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolytopeSpec {
    Uniform {
        m: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Cardinality {
        g: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Graphic {
        edges: Vec<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_vertices: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Partition {
        m: usize,
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    /// `values[mask]` is `f` of the subset encoded by `mask`.
    Explicit {
        m: usize,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Vertices { m: usize, vertices: Vec<Vec<u8>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossSpec {
    Identity { identity: usize },
    Diagonal { diagonal: Vec<f64> },
    Dense(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub p: PolytopeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PolytopeSpec>,
    pub loss: LossSpec,
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<StrategyPolytope<f64>> {
        let (oracle, labels) = match self {
            PolytopeSpec::Uniform { m, k, labels } => (SubmodularOracle::uniform(*m, *k)?, labels),
            PolytopeSpec::Cardinality { g, labels } => (SubmodularOracle::cardinality(g.clone())?, labels),
            PolytopeSpec::Graphic { edges, num_vertices, labels } => {
                let n = num_vertices.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
                (SubmodularOracle::graphic(Graph::new(n, edges.clone())?)?, labels)
            }
            PolytopeSpec::Partition { m, blocks, capacities, labels } => {
                (SubmodularOracle::partition(*m, blocks.clone(), capacities.clone())?, labels)
            }
            PolytopeSpec::Explicit { m, values, labels } => (SubmodularOracle::explicit(*m, values.clone())?, labels),
            PolytopeSpec::Vertices { m, vertices } => {
                let mut list = Vec::with_capacity(vertices.len());
                for v in vertices {
                    if v.iter().any(|&b| b > 1) {
                        return Err(Error::Domain("vertex entries must be 0 or 1".into()));
                    }
                    list.push(v.iter().map(|&b| b == 1).collect());
                }
                return StrategyPolytope::vertices(*m, list);
            }
        };
        let oracle = match labels {
            Some(l) => oracle.with_labels(l.clone())?,
            None => oracle,
        };
        Ok(StrategyPolytope::Polymatroid(oracle))
    }
}

impl LossSpec {
    pub fn build(&self) -> Result<LossMatrix<f64>> {
        match self {
            LossSpec::Identity { identity } => LossMatrix::identity(*identity),
            LossSpec::Diagonal { diagonal } => LossMatrix::diagonal(diagonal.clone()),
            LossSpec::Dense(rows) => LossMatrix::new(rows.clone()),
        }
    }
}

impl GameSpec {
    pub fn build(&self) -> Result<Game<f64>> {
        let p = self.p.build()?;
        let q = match &self.q {
            Some(q) => q.build()?,
            None => p.clone(),
        };
        let loss = self.loss.build()?;
        if loss.rows().iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("loss entries must be finite".into()));
        }
        Game::new(p, q, loss)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid game spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game specs always serialize")
    }
}
