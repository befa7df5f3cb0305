//! Problem kinds, verdicts, witnesses and the result file format shared by
//! both backends.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::model::{Distribution, Mdp, Obs, ObservationFunction, RandStrategy, GOAL_MARK};
use crate::rational::{fmt_rational, parse_rational, Rational, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Observation function plus positional randomized strategy.
    Pop,
    /// Observation function plus positional deterministic strategy.
    Pdoop,
    /// Sensor selection, one sensor per state.
    Ssp,
    /// Sensor selection with arbitrary sensor sets per state.
    SspGeneral,
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pop" => Ok(Problem::Pop),
            "pdoop" => Ok(Problem::Pdoop),
            "ssp" => Ok(Problem::Ssp),
            "ssp-general" => Ok(Problem::SspGeneral),
            other => Err(format!("unknown problem {other:?}")),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Pop => "pop",
            Problem::Pdoop => "pdoop",
            Problem::Ssp => "ssp",
            Problem::SspGeneral => "ssp-general",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown => "unknown",
        })
    }
}

/// An observation function with a strategy over its labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub obs: ObservationFunction,
    pub strategy: RandStrategy,
    /// Value claimed by the backend, when it reports one.
    pub claimed: Option<Rational>,
    /// Exactly recomputed value.
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub seconds: f64,
    pub exit_status: Option<i32>,
    pub candidates: u64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// The witness was re-evaluated exactly and meets the threshold.
    pub verified: bool,
    /// Best value seen by an exhaustive search.
    pub best: Option<Value>,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    pub fn unknown(note: impl Into<String>) -> Self {
        SolveResult {
            verdict: Verdict::Unknown,
            witness: None,
            verified: false,
            best: None,
            diagnostics: Diagnostics {
                notes: vec![note.into()],
                ..Default::default()
            },
        }
    }

    /// Exact value of the witness, if any.
    pub fn value(&self) -> Option<&Value> {
        self.witness.as_ref().map(|w| &w.value)
    }

    /// Serializes in the witness file layout.
    pub fn to_json(&self, m: &Mdp) -> String {
        let file = WitnessFile {
            verdict: self.verdict,
            value: match (&self.verdict, &self.witness) {
                (Verdict::Sat, Some(w)) => Some(w.value.to_string()),
                _ => None,
            },
            observation: self
                .witness
                .as_ref()
                .map(|w| observation_json(m, &w.obs))
                .unwrap_or_default(),
            strategy: self
                .witness
                .as_ref()
                .map(|w| strategy_json(m, &w.obs, &w.strategy))
                .unwrap_or_default(),
            verified: self.verified,
            solver_seconds: self.diagnostics.seconds,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("result serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub verdict: Verdict,
    pub value: Option<String>,
    #[serde(default)]
    pub observation: Map<String, Json>,
    #[serde(default)]
    pub strategy: Map<String, Json>,
    pub verified: bool,
    #[serde(default)]
    pub solver_seconds: f64,
}

fn observation_json(m: &Mdp, obs: &ObservationFunction) -> Map<String, Json> {
    (0..m.num_states())
        .map(|s| {
            (
                m.state_name(s).to_string(),
                Json::String(obs.text(s).to_string()),
            )
        })
        .collect()
}

fn strategy_json(m: &Mdp, obs: &ObservationFunction, sigma: &RandStrategy) -> Map<String, Json> {
    obs.labels()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let d = sigma.at(i);
            let v = match d.as_slice() {
                [(a, p)] if p == &Rational::from_integer(1.into()) => {
                    Json::String(m.action_name(*a).to_string())
                }
                _ => Json::Object(
                    d.iter()
                        .map(|(a, p)| {
                            (m.action_name(*a).to_string(), Json::String(fmt_rational(p)))
                        })
                        .collect(),
                ),
            };
            (l.clone(), v)
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum WitnessFileError {
    #[error("malformed witness file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("witness file has no observation function (verdict {0})")]
    NoWitness(Verdict),
    #[error("{0}")]
    Field(String),
}

/// The parsed content of a witness file: observation, strategy and the
/// recorded value.
pub struct LoadedWitness {
    pub obs: ObservationFunction,
    pub strategy: RandStrategy,
    pub value: Option<Value>,
}

pub fn load_witness(m: &Mdp, text: &str) -> Result<LoadedWitness, WitnessFileError> {
    let file: WitnessFile = serde_json::from_str(text)?;
    if file.observation.is_empty() {
        return Err(WitnessFileError::NoWitness(file.verdict));
    }
    let field = |msg: String| WitnessFileError::Field(msg);
    // label order follows the strategy object, then first appearance
    let mut labels: Vec<String> = file.strategy.keys().cloned().collect();
    let mut map = vec![None; m.num_states()];
    for (state, label) in &file.observation {
        let s = m.state_index(state).map_err(|e| field(e.to_string()))?;
        let label = label
            .as_str()
            .ok_or_else(|| field(format!("observation of {state} is not a string")))?;
        map[s] = Some(if label == GOAL_MARK {
            Obs::Goal
        } else {
            let i = labels.iter().position(|l| l == label).unwrap_or_else(|| {
                labels.push(label.to_string());
                labels.len() - 1
            });
            Obs::Label(i)
        });
    }
    let map = map
        .into_iter()
        .enumerate()
        .map(|(s, o)| o.ok_or_else(|| field(format!("no observation for {}", m.state_name(s)))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dists: Vec<Distribution> = Vec::with_capacity(labels.len());
    for l in &labels {
        let entry = file
            .strategy
            .get(l)
            .ok_or_else(|| field(format!("strategy has no entry for {l}")))?;
        let d = match entry {
            Json::String(a) => vec![(
                m.action_index(a).map_err(|e| field(e.to_string()))?,
                Rational::from_integer(1.into()),
            )],
            Json::Object(obj) => obj
                .iter()
                .map(|(a, p)| {
                    let a = m.action_index(a).map_err(|e| field(e.to_string()))?;
                    let p = p
                        .as_str()
                        .ok_or_else(|| field(format!("probability for {l} is not a string")))
                        .and_then(|p| parse_rational(p).map_err(|e| field(e.to_string())))?;
                    Ok((a, p))
                })
                .collect::<Result<Vec<_>, WitnessFileError>>()?,
            _ => {
                return Err(field(format!(
                    "strategy entry for {l} must be an action or a distribution"
                )))
            }
        };
        dists.push(crate::model::normalize(d));
    }
    let obs = ObservationFunction::new(labels, map).map_err(|e| field(e.to_string()))?;
    let value = file
        .value
        .map(|v| v.parse::<Value>().map_err(|e| field(e.to_string())))
        .transpose()?;
    Ok(LoadedWitness {
        obs,
        strategy: RandStrategy(dists),
        value,
    })
}
