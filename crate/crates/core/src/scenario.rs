//! JSON scenario documents.
//!
//! ```json
//! {
//!   "n": 2, "T": 3, "beta": 0.3, "c": 100.0, "seed": 7,
//!   "initial": [1, 0],
//!   "weights": { "static": [[0.4, null], [0.5, 0.3]] }
//! }
//! ```
//!
//! `weights` is either `{"static": M}` or an array of `T` matrices. Matrix rows
//! are receivers: `M[i][j]` is the probability that infected `j` infects `i`.
//! Off-diagonal `null` or `0` means no link. Diagonal entries are the
//! self-transmission probabilities and must be given as numbers.
//!
//! `initial` holds one infection probability per node. A vector of zeros and
//! ones is a deterministic configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_chain::BinaryState;
use crate::mdp::CostParams;
use crate::network::{check_probability, ContactNetwork};
use crate::transnn::ProbState;

type RawMatrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub beta: f64,
    pub c: f64,
    pub initial: Vec<f64>,
    pub weights: WeightsDocument,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsDocument {
    // Tried first: serde also accepts a one-element array as `StaticWeights`.
    PerStep(Vec<RawMatrix>),
    Static(StaticWeights),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticWeights {
    #[serde(rename = "static")]
    pub matrix: RawMatrix,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: ContactNetwork,
    pub params: CostParams,
    pub initial: ProbState,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDocument = serde_json::from_str(text).map_err(|e| {
            Error::Malformed(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_document(&doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: ScenarioDocument = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &ScenarioDocument) -> Result<Self> {
        if doc.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if doc.horizon == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        let network = match &doc.weights {
            WeightsDocument::Static(s) => {
                let m = resolve_matrix(doc.n, 0, &s.matrix)?;
                ContactNetwork::from_static(&m, doc.horizon)?
            }
            WeightsDocument::PerStep(steps) => {
                if steps.len() != doc.horizon {
                    return Err(Error::Dimension(format!(
                        "weights lists {} matrices but T = {}",
                        steps.len(),
                        doc.horizon
                    )));
                }
                let dense = steps
                    .iter()
                    .enumerate()
                    .map(|(k, m)| resolve_matrix(doc.n, k, m))
                    .collect::<Result<Vec<_>>>()?;
                ContactNetwork::from_steps(&dense)?
            }
        };
        if doc.initial.len() != doc.n {
            return Err(Error::Dimension(format!(
                "initial has {} entries, expected n = {}",
                doc.initial.len(),
                doc.n
            )));
        }
        let initial = ProbState::new(doc.initial.clone())?;
        let params = CostParams::new(doc.c, doc.beta, doc.horizon)?;
        Ok(Scenario {
            network,
            params,
            initial,
            seed: doc.seed,
        })
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let net = &self.network;
        let to_raw = |k: usize| -> RawMatrix {
            net.matrix(k)
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(j, w)| (i == j || w > 0.0).then_some(w))
                        .collect()
                })
                .collect()
        };
        let weights = if net.is_static() {
            WeightsDocument::Static(StaticWeights { matrix: to_raw(0) })
        } else {
            WeightsDocument::PerStep((0..net.horizon()).map(to_raw).collect())
        };
        ScenarioDocument {
            n: net.node_count(),
            horizon: net.horizon(),
            beta: self.params.beta,
            c: self.params.c,
            initial: self.initial.as_slice().to_vec(),
            weights,
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }

    /// The initial configuration when every initial probability is 0 or 1.
    pub fn deterministic_initial(&self) -> Option<BinaryState> {
        BinaryState::from_probabilities(self.initial.as_slice())
    }
}

/// Loads only the network part of a scenario document.
pub fn load_network(text: &str) -> Result<ContactNetwork> {
    Scenario::from_json(text).map(|s| s.network)
}

fn resolve_matrix(n: usize, k: usize, raw: &RawMatrix) -> Result<Vec<Vec<f64>>> {
    if raw.len() != n {
        return Err(Error::Dimension(format!(
            "weight matrix at step {k} has {} rows, expected n = {n}",
            raw.len()
        )));
    }
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} of weight matrix at step {k} has {} entries, expected n = {n}",
                    row.len()
                )));
            }
            row.iter()
                .enumerate()
                .map(|(j, w)| match (w, i == j) {
                    (None, true) => Err(Error::MissingSelfLoop { node: i, time: k }),
                    (None, false) => Ok(0.0),
                    (Some(w), _) => {
                        check_probability(*w, || format!("w[{i}][{j}] at step {k}"))?;
                        Ok(*w)
                    }
                })
                .collect()
        })
        .collect()
}
