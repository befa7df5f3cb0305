//! The observation, location and general location constructions.

use std::collections::{BTreeMap, HashMap};

use num_traits::One;

use super::poly::Poly;
use super::{Group, Relation, Tpmc, TpmcError, TpmcKind, VarKind, VarRole, Variable};
use crate::model::{Mdp, ModelError};
use crate::rational::Rational;

pub const DEFAULT_SUBSET_CAP: usize = 10;

/// Sensors and the set of sensors observing each state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SensorMap {
    pub names: Vec<String>,
    /// Per state, sorted sensor indices.
    pub loc: Vec<Vec<usize>>,
}

impl SensorMap {
    /// One sensor `@s` per non-goal state, observing exactly that state.
    pub fn per_state(m: &Mdp) -> Self {
        let mut names = Vec::new();
        let mut loc = vec![Vec::new(); m.num_states()];
        for s in m.non_goal_states() {
            loc[s].push(names.len());
            names.push(m.state_name(s).to_string());
        }
        SensorMap { names, loc }
    }

    /// Sensors ordered by first appearance when scanning states in order.
    pub fn from_pairs(m: &Mdp, pairs: &[(&str, Vec<&str>)]) -> Result<Self, ModelError> {
        let mut per_state: Vec<Vec<&str>> = vec![Vec::new(); m.num_states()];
        for (state, sensors) in pairs {
            per_state[m.state_index(state)?].extend(sensors.iter().copied());
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut loc = Vec::with_capacity(m.num_states());
        for sensors in per_state {
            let mut ids: Vec<usize> = sensors
                .into_iter()
                .map(|d| {
                    *index.entry(d).or_insert_with(|| {
                        names.push(d.to_string());
                        names.len() - 1
                    })
                })
                .collect();
            ids.sort_unstable();
            ids.dedup();
            loc.push(ids);
        }
        Ok(SensorMap { names, loc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Use `Σ y = B` for the sensor budget instead of `Σ y ≤ B`.
    pub exact_budget: bool,
    /// Largest `|loc(s)|` accepted by the general construction.
    pub subset_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            exact_budget: false,
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

struct Builder {
    vars: Vec<Variable>,
    groups: Vec<Group>,
}

impl Builder {
    fn group(&mut self, name: String, constant: Rational, relation: Relation) -> usize {
        self.groups.push(Group {
            name,
            constant,
            relation,
        });
        self.groups.len() - 1
    }

    fn var(&mut self, name: String, kind: VarKind, role: VarRole) -> usize {
        self.vars.push(Variable { name, kind, role });
        self.vars.len() - 1
    }
}

/// `Σ_α coeff_α · P(s, α)` as sparse polynomial rows.
fn row_from(m: &Mdp, s: usize, coeff: impl Fn(usize) -> Poly) -> Vec<(usize, Poly)> {
    let mut acc: BTreeMap<usize, Poly> = BTreeMap::new();
    for a in 0..m.num_actions() {
        let c = coeff(a);
        for (t, p) in m.transition(s, a) {
            let e = acc.entry(*t).or_default();
            *e = &*e + &c.scale(p);
        }
    }
    acc.into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

fn goal_row(s: usize) -> Vec<(usize, Poly)> {
    vec![(s, Poly::one())]
}

/// Observation tpMC: `y_{s,o}` picks the label of each non-goal state,
/// `x_{o,α}` the action distribution of each label.
pub fn build_observation_tpmc(m: &Mdp, budget: usize) -> Tpmc {
    assert!(budget >= 1, "budget must be at least 1");
    let mut b = Builder {
        vars: Vec::new(),
        groups: Vec::new(),
    };
    let labels: Vec<String> = (1..=budget).map(|o| format!("o{o}")).collect();
    let mut y: HashMap<(usize, usize), usize> = HashMap::new();
    for s in m.non_goal_states() {
        let name = m.state_name(s);
        let g = b.group(format!("obs_{name}"), Rational::one(), Relation::Equal);
        for (o, label) in labels.iter().enumerate() {
            let id = b.var(
                format!("y_{name}_{label}"),
                VarKind::BoolSum(g),
                VarRole::Observe { state: s, label: o },
            );
            y.insert((s, o), id);
        }
    }
    let x = choice_vars(&mut b, m, &labels);
    let rows = (0..m.num_states())
        .map(|s| {
            if m.is_goal(s) {
                return goal_row(s);
            }
            row_from(m, s, |a| {
                (0..budget)
                    .map(|o| &Poly::var(y[&(s, o)]) * &Poly::var(x[o][a]))
                    .sum()
            })
        })
        .collect();
    finish(
        m,
        TpmcKind::Observation,
        budget,
        b,
        rows,
        labels,
        SensorMap::default(),
        Vec::new(),
    )
}

/// `x_{o,α}` variables, one unit-sum group per label.
fn choice_vars(b: &mut Builder, m: &Mdp, stems: &[String]) -> Vec<Vec<usize>> {
    stems
        .iter()
        .enumerate()
        .map(|(o, stem)| {
            let g = b.group(format!("act_{stem}"), Rational::one(), Relation::Equal);
            (0..m.num_actions())
                .map(|a| {
                    b.var(
                        format!("x_{stem}_{}", m.action_name(a)),
                        VarKind::RealSum(g),
                        VarRole::Choice {
                            label: o,
                            action: a,
                        },
                    )
                })
                .collect()
        })
        .collect()
}

/// Location tpMC: one sensor per non-goal state; a state with its sensor on
/// is identified (`@s`), otherwise it shows the blind label `⊥`.
pub fn build_location_tpmc(m: &Mdp, budget: usize, opts: BuildOptions) -> Tpmc {
    let sensors = SensorMap::per_state(m);
    let t = location_like(m, &sensors, budget, opts, TpmcKind::Location);
    t.expect("singleton sensor sets never exceed the cap")
}

/// General location tpMC: each state is watched by a set of sensors and
/// observes the subset of them that are switched on.
pub fn build_general_location_tpmc(
    m: &Mdp,
    sensors: &SensorMap,
    budget: usize,
    opts: BuildOptions,
) -> Result<Tpmc, TpmcError> {
    location_like(m, sensors, budget, opts, TpmcKind::GeneralLocation)
}

pub const BLIND: &str = "⊥";

fn subset_label(kind: TpmcKind, sensors: &SensorMap, subset: &[usize]) -> (String, String) {
    if subset.is_empty() {
        return (BLIND.to_string(), "bot".to_string());
    }
    let names: Vec<&str> = subset.iter().map(|&d| sensors.names[d].as_str()).collect();
    match kind {
        TpmcKind::Location => (format!("@{}", names[0]), names[0].to_string()),
        _ => (format!("{{{}}}", names.join(",")), names.join("+")),
    }
}

fn location_like(
    m: &Mdp,
    sensors: &SensorMap,
    budget: usize,
    opts: BuildOptions,
    kind: TpmcKind,
) -> Result<Tpmc, TpmcError> {
    assert!(budget >= 1, "budget must be at least 1");
    for s in 0..m.num_states() {
        let k = sensors.loc.get(s).map_or(0, Vec::len);
        if m.is_goal(s) && k > 0 {
            return Err(TpmcError::SensorOnGoal(m.state_name(s).into()));
        }
        if k > opts.subset_cap {
            return Err(TpmcError::TooManySensors {
                state: m.state_name(s).into(),
                count: k,
                cap: opts.subset_cap,
            });
        }
    }
    let mut b = Builder {
        vars: Vec::new(),
        groups: Vec::new(),
    };
    let relation = if opts.exact_budget {
        Relation::Equal
    } else {
        Relation::AtMost
    };
    let y: Vec<usize> = if sensors.names.is_empty() {
        Vec::new()
    } else {
        let g = b.group(
            "sensors".into(),
            Rational::from_integer(budget.into()),
            relation,
        );
        sensors
            .names
            .iter()
            .enumerate()
            .map(|(d, name)| {
                b.var(
                    format!("y_{name}"),
                    VarKind::BoolSum(g),
                    VarRole::Sensor { sensor: d },
                )
            })
            .collect()
    };

    // subsets per state, ordered by bitmask over the sorted sensor list
    let subsets_of = |s: usize| -> Vec<Vec<usize>> {
        let l = &sensors.loc[s];
        (0u32..1 << l.len())
            .map(|mask| {
                (0..l.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| l[i])
                    .collect()
            })
            .collect()
    };
    let mut label_subsets: Vec<Vec<usize>> = Vec::new();
    for s in m.non_goal_states() {
        label_subsets.extend(subsets_of(s));
    }
    label_subsets.sort();
    label_subsets.dedup();
    let (labels, stems): (Vec<String>, Vec<String>) = label_subsets
        .iter()
        .map(|o| subset_label(kind, sensors, o))
        .unzip();
    let label_of: HashMap<&Vec<usize>, usize> = label_subsets
        .iter()
        .enumerate()
        .map(|(i, o)| (o, i))
        .collect();
    let x = choice_vars(&mut b, m, &stems);

    let rows = (0..m.num_states())
        .map(|s| {
            if m.is_goal(s) {
                return goal_row(s);
            }
            let terms: Vec<(Poly, usize)> = subsets_of(s)
                .into_iter()
                .map(|o| {
                    let weight = sensors.loc[s].iter().fold(Poly::one(), |acc, &d| {
                        let f = if o.contains(&d) {
                            Poly::var(y[d])
                        } else {
                            Poly::one_minus(y[d])
                        };
                        &acc * &f
                    });
                    (weight, label_of[&o])
                })
                .collect();
            row_from(m, s, |a| {
                terms.iter().map(|(w, o)| w * &Poly::var(x[*o][a])).sum()
            })
        })
        .collect();
    Ok(finish(
        m,
        kind,
        budget,
        b,
        rows,
        labels,
        sensors.clone(),
        label_subsets,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    m: &Mdp,
    kind: TpmcKind,
    budget: usize,
    b: Builder,
    rows: Vec<Vec<(usize, Poly)>>,
    labels: Vec<String>,
    sensors: SensorMap,
    label_subsets: Vec<Vec<usize>>,
) -> Tpmc {
    Tpmc {
        kind,
        budget,
        states: m.state_names().to_vec(),
        actions: m.action_names().to_vec(),
        initial: m.initial().to_vec(),
        is_goal: m.goal_flags().to_vec(),
        rewards: m.rewards().to_vec(),
        vars: b.vars,
        groups: b.groups,
        rows,
        labels,
        sensors,
        label_subsets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{grid, line};
    use crate::rational::int;

    #[test]
    fn observation_tpmc_variable_counts() {
        let t = build_observation_tpmc(&line(5, &int(1)).unwrap(), 2);
        let ys = t.vars.iter().filter(|v| v.name.starts_with("y_")).count();
        let xs = t.vars.iter().filter(|v| v.name.starts_with("x_")).count();
        assert_eq!((ys, xs), (8, 4));
        let names = t.var_names();
        assert_eq!(
            t.entry(0, 1).display(&names),
            "y_s0_o1*x_o1_r + y_s0_o2*x_o2_r"
        );
        assert_eq!(t.entry(2, 2), Poly::one());
    }

    #[test]
    fn location_row_matches_construction() {
        let t = build_location_tpmc(&line(5, &int(1)).unwrap(), 2, BuildOptions::default());
        let names = t.var_names();
        assert_eq!(t.labels, vec!["⊥", "@s0", "@s1", "@s3", "@s4"]);
        // y_0·x_{0,r} + (1 − y_0)·x_{⊥,r}, expanded
        assert_eq!(
            t.entry(0, 1).display(&names),
            "-1*y_s0*x_bot_r + y_s0*x_s0_r + x_bot_r"
        );
        assert_eq!(t.groups[0].relation, Relation::AtMost);
    }

    #[test]
    fn singleton_sensor_sets_reproduce_the_location_construction() {
        let m = grid(3).unwrap();
        let plain = build_location_tpmc(&m, 2, BuildOptions::default());
        let general =
            build_general_location_tpmc(&m, &SensorMap::per_state(&m), 2, BuildOptions::default())
                .unwrap();
        assert_eq!(plain.rows, general.rows);
        assert_eq!(plain.vars.len(), general.vars.len());
    }

    #[test]
    fn no_sensors_means_one_blind_label() {
        let m = line(5, &int(1)).unwrap();
        let none = SensorMap {
            names: vec![],
            loc: vec![vec![]; 5],
        };
        let t = build_general_location_tpmc(&m, &none, 1, BuildOptions::default()).unwrap();
        assert!(t.vars.iter().all(|v| v.name.starts_with("x_")));
        assert_eq!(t.labels, vec!["⊥"]);
    }

    #[test]
    fn two_sensor_state_expands_to_four_subsets() {
        let m = line(5, &int(1)).unwrap();
        let sm =
            SensorMap::from_pairs(&m, &[("s0", vec!["d1", "d2"]), ("s1", vec!["d1"])]).unwrap();
        let t = build_general_location_tpmc(&m, &sm, 2, BuildOptions::default()).unwrap();
        assert_eq!(t.labels, vec!["⊥", "{d1}", "{d1,d2}", "{d2}"]);
        // with every x_{o,r} = 1 the subset weights of s0 -> s1 collapse to 1
        let r = m.action_index("r").unwrap();
        let mut row = t.entry(0, 1);
        for (id, v) in t.vars.iter().enumerate() {
            if matches!(v.role, VarRole::Choice { action, .. } if action == r) {
                row = row.substitute(id, &Poly::one());
            }
        }
        assert_eq!(row, Poly::one());
    }

    #[test]
    fn sensor_cap_and_goal_sensors_are_rejected() {
        let m = line(5, &int(1)).unwrap();
        let many: Vec<String> = (0..11).map(|i| format!("d{i}")).collect();
        let sm = SensorMap::from_pairs(&m, &[("s0", many.iter().map(String::as_str).collect())])
            .unwrap();
        assert!(matches!(
            build_general_location_tpmc(&m, &sm, 1, BuildOptions::default()),
            Err(TpmcError::TooManySensors { count: 11, .. })
        ));
        let on_goal = SensorMap::from_pairs(&m, &[("s2", vec!["d"])]).unwrap();
        assert!(build_general_location_tpmc(&m, &on_goal, 1, BuildOptions::default()).is_err());
    }
}
