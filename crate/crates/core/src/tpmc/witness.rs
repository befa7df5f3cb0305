//! Conversions between (observation function, strategy) pairs and
//! instantiations of the matching tpMC.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::{Instantiation, Tpmc, TpmcError, TpmcKind, VarRole};
use crate::model::{dirac, normalize, Distribution, Obs, ObservationFunction, RandStrategy};
use crate::rational::Rational;

/// For each label of `obs`, the tpMC label it is encoded as.
fn label_map(t: &Tpmc, obs: &ObservationFunction) -> Result<Vec<usize>, TpmcError> {
    let by_name: Option<Vec<usize>> = obs
        .labels()
        .iter()
        .map(|l| t.labels.iter().position(|x| x == l))
        .collect();
    match (t.kind, by_name) {
        (_, Some(map)) => Ok(map),
        (TpmcKind::Observation, None) if obs.num_labels() <= t.budget => {
            Ok((0..obs.num_labels()).collect())
        }
        (TpmcKind::Observation, None) => Err(TpmcError::LabelOutOfBudget {
            used: obs.num_labels(),
            budget: t.budget,
        }),
        (_, None) => {
            let s = (0..obs.map().len())
                .find(|&s| matches!(obs.get(s), Obs::Label(o) if !t.labels.contains(&obs.labels()[o])))
                .unwrap_or(0);
            Err(TpmcError::NotLocationObservation(t.states[s].clone()))
        }
    }
}

/// The instantiation whose chain is `M[obs][σ]` (goals absorbing). Labels of
/// the tpMC that `obs` does not use get the first action.
pub fn encode_witness(
    t: &Tpmc,
    obs: &ObservationFunction,
    sigma: &RandStrategy,
) -> Result<Instantiation, TpmcError> {
    if obs.map().len() != t.num_states() {
        return Err(TpmcError::Precondition(
            "observation function does not cover the model".into(),
        ));
    }
    if sigma.len() < obs.num_labels() {
        return Err(TpmcError::Precondition(
            "strategy does not cover every label".into(),
        ));
    }
    let to_t = label_map(t, obs)?;
    let used: BTreeSet<usize> = obs
        .map()
        .iter()
        .filter_map(|o| match o {
            Obs::Label(i) => Some(to_t[*i]),
            Obs::Goal => None,
        })
        .collect();

    let mut choice: Vec<Distribution> = vec![dirac(0); t.labels.len()];
    for (i, &tl) in to_t.iter().enumerate() {
        choice[tl] = sigma.at(i).clone();
    }

    let mut on: BTreeSet<usize> = BTreeSet::new();
    match t.kind {
        TpmcKind::Observation => {
            if used.len() > t.budget {
                return Err(TpmcError::LabelOutOfBudget {
                    used: used.len(),
                    budget: t.budget,
                });
            }
        }
        TpmcKind::Location | TpmcKind::GeneralLocation => {
            for s in 0..t.num_states() {
                if let Obs::Label(i) = obs.get(s) {
                    on.extend(t.label_subsets[to_t[i]].iter().copied());
                }
            }
            for s in 0..t.num_states() {
                if let Obs::Label(i) = obs.get(s) {
                    let seen: Vec<usize> = t.sensors.loc[s]
                        .iter()
                        .copied()
                        .filter(|d| on.contains(d))
                        .collect();
                    if seen != t.label_subsets[to_t[i]] {
                        return Err(TpmcError::NotLocationObservation(t.states[s].clone()));
                    }
                }
            }
            let budget_ok = if t
                .groups
                .iter()
                .any(|g| g.name == "sensors" && g.relation == super::Relation::Equal)
            {
                on.len() == t.budget
            } else {
                on.len() <= t.budget
            };
            if !budget_ok {
                return Err(TpmcError::LabelOutOfBudget {
                    used: on.len(),
                    budget: t.budget,
                });
            }
        }
    }

    let values = t
        .vars
        .iter()
        .map(|v| match v.role {
            VarRole::Observe { state, label } => {
                let hit = matches!(obs.get(state), Obs::Label(i) if to_t[i] == label);
                if hit {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            VarRole::Sensor { sensor } => {
                if on.contains(&sensor) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            VarRole::Choice { label, action } => choice[label]
                .iter()
                .find(|(a, _)| *a == action)
                .map_or_else(Rational::zero, |(_, p)| p.clone()),
        })
        .collect();
    Ok(Instantiation(values))
}

fn boolean(t: &Tpmc, inst: &Instantiation, id: usize) -> Result<bool, TpmcError> {
    let v = inst.get(id);
    if v.is_one() {
        Ok(true)
    } else if v.is_zero() {
        Ok(false)
    } else {
        Err(TpmcError::Decode(format!(
            "{} is neither 0 nor 1",
            t.vars[id].name
        )))
    }
}

/// Reads the observation function off the `y` values and the strategy off
/// the `x` values. Only labels that some state uses are kept.
pub fn decode_witness(
    t: &Tpmc,
    inst: &Instantiation,
) -> Result<(ObservationFunction, RandStrategy), TpmcError> {
    if inst.0.len() != t.vars.len() {
        return Err(TpmcError::Decode(
            "instantiation has the wrong arity".into(),
        ));
    }
    let mut state_label: Vec<Option<usize>> = vec![None; t.num_states()];
    match t.kind {
        TpmcKind::Observation => {
            for (id, v) in t.vars.iter().enumerate() {
                if let VarRole::Observe { state, label } = v.role {
                    if boolean(t, inst, id)? {
                        if state_label[state].is_some() {
                            return Err(TpmcError::Decode(format!(
                                "{} has two observations",
                                t.states[state]
                            )));
                        }
                        state_label[state] = Some(label);
                    }
                }
            }
        }
        TpmcKind::Location | TpmcKind::GeneralLocation => {
            let mut on = vec![false; t.sensors.names.len()];
            for (id, v) in t.vars.iter().enumerate() {
                if let VarRole::Sensor { sensor } = v.role {
                    on[sensor] = boolean(t, inst, id)?;
                }
            }
            let index: HashMap<&Vec<usize>, usize> = t
                .label_subsets
                .iter()
                .enumerate()
                .map(|(i, o)| (o, i))
                .collect();
            for s in (0..t.num_states()).filter(|&s| !t.is_goal[s]) {
                let seen: Vec<usize> = t.sensors.loc[s]
                    .iter()
                    .copied()
                    .filter(|&d| on[d])
                    .collect();
                state_label[s] = Some(index[&seen]);
            }
        }
    }

    let mut used: Vec<usize> = state_label.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut map = Vec::with_capacity(t.num_states());
    for s in 0..t.num_states() {
        map.push(match (t.is_goal[s], state_label[s]) {
            (true, _) => Obs::Goal,
            (false, Some(l)) => Obs::Label(used.binary_search(&l).unwrap()),
            (false, None) => {
                return Err(TpmcError::Decode(format!(
                    "{} has no observation",
                    t.states[s]
                )))
            }
        });
    }
    let labels = used.iter().map(|&l| t.labels[l].clone()).collect();
    let obs = ObservationFunction::new(labels, map)?;

    let mut dists: Vec<Distribution> = vec![Vec::new(); used.len()];
    for (id, v) in t.vars.iter().enumerate() {
        if let VarRole::Choice { label, action } = v.role {
            if let Ok(i) = used.binary_search(&label) {
                dists[i].push((action, inst.get(id).clone()));
            }
        }
    }
    let dists: Vec<Distribution> = dists.into_iter().map(normalize).collect();
    Ok((obs, RandStrategy(dists)))
}
