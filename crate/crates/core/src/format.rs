//! JSON model files.
//!
//! ```json
//! { "states": ["s0", "s1"], "actions": ["go"], "initial": ["s0"], "goal": ["s1"],
//!   "rewards": {"s0": "1", "s1": "0"},
//!   "transitions": [ {"from": "s0", "action": "go", "to": {"s1": "1"}},
//!                    {"from": "s1", "action": "go", "to": {"s1": "1"}} ] }
//! ```
//!
//! Numbers are strings holding integers or `num/den`. Every `(state, action)`
//! pair needs an entry; there are no implicit self-loops.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::model::{Mdp, Violation};
use crate::rational::{fmt_rational, parse_rational, Rational};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Vec<String>,
    actions: Vec<String>,
    initial: Vec<String>,
    goal: Vec<String>,
    rewards: Map<String, Json>,
    transitions: Vec<TransitionEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    from: String,
    action: String,
    to: Map<String, Json>,
}

fn field(field: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn number(path: &str, v: &Json) -> Result<Rational, FormatError> {
    match v {
        Json::String(s) => parse_rational(s).map_err(|e| field(path, e.to_string())),
        _ => Err(field(
            path,
            "expected a string holding an integer or num/den",
        )),
    }
}

/// Parses and validates a model file.
pub fn load_model(text: &str) -> Result<Mdp, FormatError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut index = HashMap::new();
    for (i, s) in file.states.iter().enumerate() {
        if index.insert(s.as_str(), i).is_some() {
            return Err(field(
                format!("states[{i}]"),
                format!("duplicate state {s:?}"),
            ));
        }
    }
    let state = |path: String, name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| field(path, format!("unknown state {name:?}")))
    };
    let mut actions = HashMap::new();
    for (i, a) in file.actions.iter().enumerate() {
        if actions.insert(a.as_str(), i).is_some() {
            return Err(field(
                format!("actions[{i}]"),
                format!("duplicate action {a:?}"),
            ));
        }
    }
    let initial = file
        .initial
        .iter()
        .enumerate()
        .map(|(i, s)| state(format!("initial[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    let goal = file
        .goal
        .iter()
        .enumerate()
        .map(|(i, s)| state(format!("goal[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rewards = vec![None; file.states.len()];
    for (name, v) in &file.rewards {
        let path = format!("rewards.{name}");
        let s = state(path.clone(), name)?;
        rewards[s] = Some(number(&path, v)?);
    }
    let rewards = rewards
        .into_iter()
        .enumerate()
        .map(|(s, r)| {
            r.ok_or_else(|| {
                field(
                    "rewards",
                    format!("missing reward for {:?}", file.states[s]),
                )
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut trans = vec![vec![Vec::new(); file.actions.len()]; file.states.len()];
    let mut seen = vec![vec![false; file.actions.len()]; file.states.len()];
    for (i, t) in file.transitions.iter().enumerate() {
        let s = state(format!("transitions[{i}].from"), &t.from)?;
        let a = *actions.get(t.action.as_str()).ok_or_else(|| {
            field(
                format!("transitions[{i}].action"),
                format!("unknown action {:?}", t.action),
            )
        })?;
        if std::mem::replace(&mut seen[s][a], true) {
            return Err(field(
                format!("transitions[{i}]"),
                format!("duplicate entry for ({}, {})", t.from, t.action),
            ));
        }
        for (target, p) in &t.to {
            let path = format!("transitions[{i}].to.{target}");
            let u = state(path.clone(), target)?;
            trans[s][a].push((u, number(&path, p)?));
        }
    }
    let m = Mdp::new(file.states, file.actions, initial, goal, trans, rewards);
    m.validate().map_err(FormatError::Invalid)?;
    Ok(m)
}

/// Canonical serialization: declaration order everywhere, exact fractions,
/// byte-stable.
pub fn store_model(m: &Mdp) -> String {
    let name = |s: usize| m.state_name(s).to_string();
    let file = ModelFile {
        states: m.state_names().to_vec(),
        actions: m.action_names().to_vec(),
        initial: m.initial().iter().map(|&s| name(s)).collect(),
        goal: m.goal().iter().map(|&s| name(s)).collect(),
        rewards: (0..m.num_states())
            .map(|s| (name(s), Json::String(fmt_rational(m.reward(s)))))
            .collect(),
        transitions: (0..m.num_states())
            .flat_map(|s| {
                (0..m.num_actions()).map(move |a| TransitionEntry {
                    from: name(s),
                    action: m.action_name(a).to_string(),
                    to: m
                        .transition(s, a)
                        .iter()
                        .map(|(t, p)| (name(*t), Json::String(fmt_rational(p))))
                        .collect(),
                })
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("model serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{grid, line, line_sink, maze};
    use crate::rational::{int, ratio};

    #[test]
    fn round_trip_is_identity() {
        for m in [
            line(5, &int(1)).unwrap(),
            line_sink(7, &ratio(1, 2)).unwrap(),
            grid(3).unwrap(),
            maze(5).unwrap(),
        ] {
            let text = store_model(&m);
            let back = load_model(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(store_model(&back), text);
        }
    }

    #[test]
    fn fractions_stay_fractions() {
        let text = store_model(&line(5, &ratio(1, 2)).unwrap());
        assert!(text.contains("\"1/2\""));
        assert!(text.contains("\"1\""));
        assert!(!text.contains("0.5"));
    }

    #[test]
    fn line_file_has_expected_sets() {
        let m = load_model(&store_model(&line(5, &int(1)).unwrap())).unwrap();
        assert_eq!(m.goal(), &[2]);
        assert_eq!(m.initial(), &[0, 1, 3, 4]);
    }

    const TINY: &str = r#"{"states": ["a", "g"], "actions": ["go"], "initial": ["a"], "goal": ["g"],
        "rewards": {"a": "1", "g": "0"},
        "transitions": [{"from": "a", "action": "go", "to": {"g": "9/10"}},
                        {"from": "g", "action": "go", "to": {"g": "1"}}]}"#;

    #[test]
    fn row_sum_is_reported() {
        match load_model(TINY) {
            Err(FormatError::Invalid(v)) => assert!(matches!(v[0], Violation::RowSum { .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_locus() {
        let bad_ref = TINY.replace("{\"g\": \"9/10\"}", "{\"h\": \"1\"}");
        let e = load_model(&bad_ref).unwrap_err().to_string();
        assert!(e.contains("transitions[0].to.h"), "{e}");
        let bad_num = TINY.replace("9/10", "0.9");
        assert!(load_model(&bad_num)
            .unwrap_err()
            .to_string()
            .contains("transitions[0].to.g"));
        match load_model("{\n  \"states\": [,\n}") {
            Err(FormatError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let missing = TINY.replace(
            r#",
                        {"from": "g", "action": "go", "to": {"g": "1"}}"#,
            "",
        );
        let e = load_model(&missing.replace("9/10", "1"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("missing transition for (g, go)"), "{e}");
    }
}
