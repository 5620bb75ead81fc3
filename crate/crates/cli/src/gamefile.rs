//! The JSON game description.
//!
//! ```json
//! {
//!   "states": 2,
//!   "mass": 2.0,
//!   "hyperarcs": [
//!     {"state": 1, "action": "go", "heads": [{"state": 2, "prob": 1.0}], "cost": {"a": 1.0, "b": 0.0}},
//!     {"state": 2, "action": "go", "heads": [{"state": 1, "prob": 1.0}], "cost": {"a": 1.0, "b": 1.0}}
//!   ],
//!   "perturbation": [0.0, 0.0]
//! }
//! ```
//!
//! States are 1-based. The order of `hyperarcs` fixes the order of every
//! vector in the output.

use mdpcg::{CostModel, Game, Hyperarc};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub states: usize,
    pub mass: f64,
    pub hyperarcs: Vec<HyperarcEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperarcEntry {
    pub state: usize,
    pub action: String,
    pub heads: Vec<Head>,
    pub cost: AffineCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Head {
    pub state: usize,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineCost {
    pub a: f64,
    pub b: f64,
}

/// A parsed game and the perturbation to evaluate it at.
#[derive(Clone, Debug)]
pub struct LoadedGame {
    pub spec: Game,
    pub eps: DVector<f64>,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game file serializes")
    }

    pub fn into_game(self) -> Result<LoadedGame, CliError> {
        if self.states == 0 {
            return Err(CliError::Parse("\"states\" must be positive".into()));
        }
        let mut arcs = Vec::with_capacity(self.hyperarcs.len());
        let mut slope = Vec::with_capacity(self.hyperarcs.len());
        let mut intercept = Vec::with_capacity(self.hyperarcs.len());
        for (i, h) in self.hyperarcs.iter().enumerate() {
            let name = format!("hyperarc {} (state {}, action {:?})", i + 1, h.state, h.action);
            let index = |s: usize| {
                if s == 0 || s > self.states {
                    Err(CliError::Parse(format!("{name}: state {s} outside 1..={}", self.states)))
                } else {
                    Ok(s - 1)
                }
            };
            let tail = index(h.state)?;
            let total: f64 = h.heads.iter().map(|x| x.prob).sum();
            if h.heads.iter().any(|x| !(x.prob >= 0.0)) {
                return Err(CliError::Parse(format!("{name}: negative probability")));
            }
            if !((total - 1.0).abs() <= PROB_TOLERANCE) {
                return Err(CliError::Parse(format!(
                    "{name}: head probabilities sum to {total}, not 1"
                )));
            }
            let heads = h
                .heads
                .iter()
                .map(|x| Ok((index(x.state)?, x.prob / total)))
                .collect::<Result<Vec<_>, CliError>>()?;
            arcs.push(Hyperarc::new(tail, h.action.clone(), heads));
            slope.push(h.cost.a);
            intercept.push(h.cost.b);
        }
        let k = arcs.len();
        let spec = Game::new(self.states, arcs, CostModel::affine(slope, intercept), self.mass)
            .map_err(|e| CliError::Parse(e.to_string()))?;
        let eps = match self.perturbation {
            Some(p) if p.len() != k => {
                return Err(CliError::Parse(format!(
                    "\"perturbation\" has {} entries, expected {k}",
                    p.len()
                )))
            }
            Some(p) => DVector::from_vec(p),
            None => DVector::zeros(k),
        };
        Ok(LoadedGame { spec, eps })
    }

    /// The file describing `spec`; `eps` is written only when nonzero.
    pub fn from_game(spec: &Game, eps: &DVector<f64>) -> Result<Self, CliError> {
        let (slope, intercept) = match spec.costs() {
            CostModel::Affine { slope, intercept } => (slope, intercept),
            CostModel::General(_) => {
                return Err(CliError::Usage("only affine costs can be written to a game file".into()))
            }
        };
        let hyperarcs = spec
            .hyperarcs()
            .iter()
            .enumerate()
            .map(|(k, h)| HyperarcEntry {
                state: h.tail + 1,
                action: h.action.clone(),
                heads: h
                    .heads
                    .iter()
                    .map(|&(s, prob)| Head { state: s + 1, prob })
                    .collect(),
                cost: AffineCost {
                    a: slope[k],
                    b: intercept[k],
                },
            })
            .collect();
        Ok(GameFile {
            states: spec.num_states(),
            mass: spec.mass(),
            hyperarcs,
            perturbation: if eps.iter().any(|v| *v != 0.0) {
                Some(eps.iter().copied().collect())
            } else {
                None
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWAP: &str = r#"{
        "states": 2, "mass": 2.0,
        "hyperarcs": [
            {"state": 1, "action": "go", "heads": [{"state": 2, "prob": 1.0}], "cost": {"a": 1.0, "b": 0.0}},
            {"state": 2, "action": "go", "heads": [{"state": 1, "prob": 1.0}], "cost": {"a": 1.0, "b": 1.0}}
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let file = GameFile::from_json(SWAP).unwrap();
        let game = file.clone().into_game().unwrap();
        assert_eq!(game.spec.num_hyperarcs(), 2);
        assert_eq!(game.spec.hyperarcs()[0].heads, vec![(1, 1.0)]);
        let back = GameFile::from_game(&game.spec, &game.eps).unwrap();
        assert_eq!(back, file);
        assert_eq!(GameFile::from_json(&back.to_json()).unwrap(), file);
    }

    #[test]
    fn rejects_bad_distributions() {
        let text = SWAP.replacen("\"prob\": 1.0", "\"prob\": 0.95", 1);
        let err = GameFile::from_json(&text).unwrap().into_game().unwrap_err();
        assert!(err.to_string().contains("hyperarc 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let text = SWAP.replacen("\"prob\": 1.0", "\"prob\": 1.0000000001", 1);
        let game = GameFile::from_json(&text).unwrap().into_game().unwrap();
        assert_eq!(game.spec.hyperarcs()[0].heads[0].1, 1.0);
    }

    #[test]
    fn rejects_out_of_range_states_and_unknown_fields() {
        let text = SWAP.replacen("\"state\": 2, \"prob\"", "\"state\": 3, \"prob\"", 1);
        assert!(GameFile::from_json(&text).unwrap().into_game().is_err());
        let text = SWAP.replacen("\"mass\"", "\"weight\": 1, \"mass\"", 1);
        assert!(GameFile::from_json(&text).is_err());
    }
}
