//! Typed parametric Markov chains.
//!
//! Transition probabilities are polynomials over typed variables. Sum-typed
//! variables belong to a named group whose values must add up to the group
//! constant (or stay below it, for budget groups). Fixing every variable
//! yields an ordinary chain.

mod build;
pub mod poly;
mod reduction;
mod witness;

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::{Distribution, Dtmc};
use crate::rational::{fmt_rational, Rational};

pub use build::{
    build_general_location_tpmc, build_location_tpmc, build_observation_tpmc, BuildOptions,
    SensorMap, BLIND, DEFAULT_SUBSET_CAP,
};
pub use poly::{Poly, VarId};
pub use reduction::{build_policy_reduction, ReductionVariant};
pub use witness::{decode_witness, encode_witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub constant: Rational,
    pub relation: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Real,
    Bool,
    RealSum(usize),
    BoolSum(usize),
}

impl VarKind {
    pub fn is_bool(self) -> bool {
        matches!(self, VarKind::Bool | VarKind::BoolSum(_))
    }

    pub fn group(self) -> Option<usize> {
        match self {
            VarKind::RealSum(g) | VarKind::BoolSum(g) => Some(g),
            _ => None,
        }
    }
}

/// What a variable stands for, used when decoding witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// `y_{s,o}`: state `s` receives observation label `o`.
    Observe { state: usize, label: usize },
    /// `y_d`: sensor `d` is switched on.
    Sensor { sensor: usize },
    /// `x_{o,α}`: probability of action `α` under label `o`.
    Choice { label: usize, action: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpmcKind {
    Observation,
    Location,
    GeneralLocation,
}

impl TpmcKind {
    pub fn name(self) -> &'static str {
        match self {
            TpmcKind::Observation => "observation",
            TpmcKind::Location => "location",
            TpmcKind::GeneralLocation => "general-location",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tpmc {
    pub kind: TpmcKind,
    pub budget: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: Vec<usize>,
    pub is_goal: Vec<bool>,
    pub rewards: Vec<Rational>,
    pub vars: Vec<Variable>,
    pub groups: Vec<Group>,
    /// Sparse rows: `(target, polynomial)` sorted by target.
    pub rows: Vec<Vec<(usize, Poly)>>,
    /// Observation labels the `x` groups belong to.
    pub labels: Vec<String>,
    /// Location kinds: sensor names, per-state sensor sets and the sensor
    /// subset behind each label.
    pub sensors: SensorMap,
    pub label_subsets: Vec<Vec<usize>>,
}

/// Variable values indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiation(pub Vec<Rational>);

impl Instantiation {
    /// Builds from `(name, value)` pairs; unnamed variables default to zero.
    pub fn from_names(t: &Tpmc, pairs: &[(&str, Rational)]) -> Result<Self, TpmcError> {
        let mut vals = vec![Rational::zero(); t.vars.len()];
        for (name, v) in pairs {
            let id = t
                .var_id(name)
                .ok_or_else(|| TpmcError::UnknownVariable(name.to_string()))?;
            vals[id] = v.clone();
        }
        Ok(Instantiation(vals))
    }

    pub fn get(&self, v: VarId) -> &Rational {
        &self.0[v]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstViolation {
    Arity {
        expected: usize,
        got: usize,
    },
    NotBoolean {
        var: String,
        value: Rational,
    },
    GroupSum {
        group: String,
        sum: Rational,
    },
    OutOfRange {
        var: String,
        value: Rational,
    },
    NegativeEntry {
        from: String,
        to: String,
        value: Rational,
    },
    RowSum {
        state: String,
        sum: Rational,
    },
}

impl std::fmt::Display for InstViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstViolation::Arity { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
            InstViolation::NotBoolean { var, value } => {
                write!(f, "{var} = {} is not boolean", fmt_rational(value))
            }
            InstViolation::GroupSum { group, sum } => {
                write!(f, "group sum of {group} is {}", fmt_rational(sum))
            }
            InstViolation::OutOfRange { var, value } => {
                write!(f, "{var} = {} lies outside [0, 1]", fmt_rational(value))
            }
            InstViolation::NegativeEntry { from, to, value } => {
                write!(f, "negative entry {from} -> {to}: {}", fmt_rational(value))
            }
            InstViolation::RowSum { state, sum } => {
                write!(f, "row {state} sums to {}", fmt_rational(sum))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TpmcError {
    #[error("ill-typed instantiation: {}", join(.0))]
    TypeViolation(Vec<InstViolation>),
    #[error("instantiation is not well-defined: {}", join(.0))]
    NotWellDefined(Vec<InstViolation>),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("state {state} has {count} sensors, more than the cap of {cap}")]
    TooManySensors {
        state: String,
        count: usize,
        cap: usize,
    },
    #[error("goal state {0} carries sensors")]
    SensorOnGoal(String),
    #[error("observation uses {used} labels, budget is {budget}")]
    LabelOutOfBudget { used: usize, budget: usize },
    #[error("observation of state {0} is not induced by a sensor selection")]
    NotLocationObservation(String),
    #[error("decoding failed: {0}")]
    Decode(String),
    #[error("{0}")]
    Model(#[from] crate::model::ModelError),
    #[error("{0}")]
    Precondition(String),
}

fn join(v: &[InstViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Tpmc {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn goal(&self) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| self.is_goal[s])
            .collect()
    }

    /// Polynomial of the transition `s → t` (zero if absent).
    pub fn entry(&self, s: usize, t: usize) -> Poly {
        self.rows[s]
            .iter()
            .find(|(u, _)| *u == t)
            .map(|(_, p)| p.clone())
            .unwrap_or_default()
    }

    /// Type constraints: booleans, group sums, and `[0, 1]` ranges for
    /// members of unit-sum real groups.
    fn type_violations(&self, inst: &Instantiation) -> Vec<InstViolation> {
        let mut out = Vec::new();
        if inst.0.len() != self.vars.len() {
            out.push(InstViolation::Arity {
                expected: self.vars.len(),
                got: inst.0.len(),
            });
            return out;
        }
        let mut sums = vec![Rational::zero(); self.groups.len()];
        for (v, val) in self.vars.iter().zip(&inst.0) {
            if v.kind.is_bool() && !(val.is_zero() || val.is_one()) {
                out.push(InstViolation::NotBoolean {
                    var: v.name.clone(),
                    value: val.clone(),
                });
            }
            if let VarKind::RealSum(g) = v.kind {
                if self.groups[g].constant.is_one() && (val.is_negative() || val > &Rational::one())
                {
                    out.push(InstViolation::OutOfRange {
                        var: v.name.clone(),
                        value: val.clone(),
                    });
                }
            }
            if let Some(g) = v.kind.group() {
                sums[g] += val;
            }
        }
        for (g, sum) in self.groups.iter().zip(sums) {
            let ok = match g.relation {
                Relation::Equal => sum == g.constant,
                Relation::AtMost => sum <= g.constant,
            };
            if !ok {
                out.push(InstViolation::GroupSum {
                    group: g.name.clone(),
                    sum,
                });
            }
        }
        out
    }

    fn evaluate_rows(&self, inst: &Instantiation) -> (Vec<Distribution>, Vec<InstViolation>) {
        let mut out = Vec::new();
        let mut rows = Vec::with_capacity(self.num_states());
        for (s, row) in self.rows.iter().enumerate() {
            let mut dist: Distribution = Vec::with_capacity(row.len());
            let mut sum = Rational::zero();
            for (t, p) in row {
                let v = p.eval(&inst.0);
                if v.is_negative() {
                    out.push(InstViolation::NegativeEntry {
                        from: self.states[s].clone(),
                        to: self.states[*t].clone(),
                        value: v.clone(),
                    });
                }
                sum += &v;
                dist.push((*t, v));
            }
            if !sum.is_one() {
                out.push(InstViolation::RowSum {
                    state: self.states[s].clone(),
                    sum,
                });
            }
            rows.push(dist);
        }
        (rows, out)
    }

    /// Reports every type and well-definedness violation of `inst`.
    pub fn check_instantiation(&self, inst: &Instantiation) -> Result<(), Vec<InstViolation>> {
        let mut v = self.type_violations(inst);
        if v.iter().any(|x| matches!(x, InstViolation::Arity { .. })) {
            return Err(v);
        }
        v.extend(self.evaluate_rows(inst).1);
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// The chain `D[ι]`.
    pub fn instantiate(&self, inst: &Instantiation) -> Result<Dtmc, TpmcError> {
        let tv = self.type_violations(inst);
        if !tv.is_empty() {
            return Err(TpmcError::TypeViolation(tv));
        }
        let (rows, bad) = self.evaluate_rows(inst);
        if !bad.is_empty() {
            return Err(TpmcError::NotWellDefined(bad));
        }
        Ok(Dtmc::new(
            self.states.clone(),
            self.initial.clone(),
            self.goal(),
            rows,
            self.rewards.clone(),
        ))
    }

    /// Row sums after eliminating the last variable of every equality group
    /// via `v_last = C - Σ others`. Well-formed constructions reduce to 1.
    pub fn symbolic_row_sums(&self) -> Vec<Poly> {
        let mut members: HashMap<usize, Vec<VarId>> = HashMap::new();
        for (id, v) in self.vars.iter().enumerate() {
            if let Some(g) = v.kind.group() {
                members.entry(g).or_default().push(id);
            }
        }
        let mut subst: Vec<(VarId, Poly)> = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            if group.relation != Relation::Equal {
                continue;
            }
            if let Some((&last, rest)) = members.get(&g).and_then(|m| m.split_last()) {
                let others: Poly = rest.iter().map(|&v| Poly::var(v)).sum();
                subst.push((last, &Poly::constant(group.constant.clone()) - &others));
            }
        }
        self.rows
            .iter()
            .map(|row| {
                let mut sum: Poly = row.iter().map(|(_, p)| p.clone()).sum();
                for (v, by) in &subst {
                    if sum.vars().contains(v) {
                        sum = sum.substitute(*v, by);
                    }
                }
                sum
            })
            .collect()
    }

    /// Stable text listing of groups, variables and rows.
    pub fn dump(&self) -> String {
        let names = self.var_names();
        let mut out = String::new();
        let state_list = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|s| self.states[s].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "tpmc {} budget {}", self.kind.name(), self.budget);
        let _ = writeln!(out, "states: {}", self.states.join(" "));
        let _ = writeln!(
            out,
            "initial: {}",
            state_list(&mut self.initial.iter().copied())
        );
        let _ = writeln!(out, "goal: {}", state_list(&mut self.goal().into_iter()));
        let _ = writeln!(out, "groups:");
        for g in &self.groups {
            let rel = match g.relation {
                Relation::Equal => "=",
                Relation::AtMost => "<=",
            };
            let _ = writeln!(out, "  {} sum {rel} {}", g.name, fmt_rational(&g.constant));
        }
        let _ = writeln!(out, "vars:");
        for v in &self.vars {
            let kind = match v.kind {
                VarKind::Real => "real".to_string(),
                VarKind::Bool => "bool".to_string(),
                VarKind::RealSum(g) => format!("real in {}", self.groups[g].name),
                VarKind::BoolSum(g) => format!("bool in {}", self.groups[g].name),
            };
            let _ = writeln!(out, "  {}: {kind}", v.name);
        }
        let _ = writeln!(out, "rows:");
        for (s, row) in self.rows.iter().enumerate() {
            for (t, p) in row {
                let _ = writeln!(
                    out,
                    "  {} -> {}: {}",
                    self.states[s],
                    self.states[*t],
                    p.display(&names)
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::line;
    use crate::model::{dirac, RandStrategy};
    use crate::rational::{int, ratio};

    #[test]
    fn fig_four_instantiation_gives_optimal_chain() {
        let m = line(5, &int(1)).unwrap();
        let t = build_observation_tpmc(&m, 2);
        let one = int(1);
        let inst = Instantiation::from_names(
            &t,
            &[
                ("y_s0_o1", one.clone()),
                ("y_s1_o1", one.clone()),
                ("y_s3_o2", one.clone()),
                ("y_s4_o2", one.clone()),
                ("x_o1_r", one.clone()),
                ("x_o2_l", one.clone()),
            ],
        )
        .unwrap();
        assert!(t.check_instantiation(&inst).is_ok());
        let d = t.instantiate(&inst).unwrap();
        assert_eq!(d.row(1), &dirac(2));
        assert_eq!(d.row(3), &dirac(2));
        assert_eq!(d.row(0), &dirac(1));
    }

    #[test]
    fn uniform_choices_give_uniform_chain() {
        let m = line(5, &ratio(1, 2)).unwrap();
        let t = build_observation_tpmc(&m, 2);
        let half = ratio(1, 2);
        let mut pairs = vec![];
        for s in ["s0", "s1", "s3", "s4"] {
            pairs.push((format!("y_{s}_o1"), int(1)));
        }
        for x in ["x_o1_l", "x_o1_r", "x_o2_l", "x_o2_r"] {
            pairs.push((x.to_string(), half.clone()));
        }
        let refs: Vec<(&str, Rational)> =
            pairs.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
        let d = t
            .instantiate(&Instantiation::from_names(&t, &refs).unwrap())
            .unwrap();
        let expected = m
            .induced_dtmc(&RandStrategy::uniform(5, 2))
            .unwrap()
            .with_absorbing_goals();
        assert_eq!(d, expected);
    }

    #[test]
    fn violations_are_reported() {
        let m = line(5, &int(1)).unwrap();
        let t = build_observation_tpmc(&m, 2);
        let mut pairs: Vec<(String, Rational)> = ["s0", "s1", "s3", "s4"]
            .iter()
            .flat_map(|s| [(format!("y_{s}_o1"), int(1)), (format!("y_{s}_o2"), int(1))])
            .collect();
        pairs.push(("x_o1_l".into(), ratio(-1, 2)));
        pairs.push(("x_o1_r".into(), ratio(3, 2)));
        pairs.push(("x_o2_l".into(), int(1)));
        let refs: Vec<(&str, Rational)> =
            pairs.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
        let inst = Instantiation::from_names(&t, &refs).unwrap();
        let v = t.check_instantiation(&inst).unwrap_err();
        assert!(v
            .iter()
            .any(|x| matches!(x, InstViolation::GroupSum { group, .. } if group == "obs_s0")));
        assert!(v
            .iter()
            .any(|x| matches!(x, InstViolation::OutOfRange { var, .. } if var == "x_o1_l")));
        assert!(matches!(
            t.instantiate(&inst),
            Err(TpmcError::TypeViolation(_))
        ));
    }
}
