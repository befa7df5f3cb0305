//! MDPs, Markov chains, observation functions and positional strategies.
//!
//! States and actions are referred to by dense indices internally; names are
//! kept for I/O. Distributions are sparse, sorted by target and free of zero
//! entries, so two equal distributions compare equal structurally.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{fmt_rational, Rational};

/// Sparse distribution: `(index, probability)` pairs sorted by index.
pub type Distribution = Vec<(usize, Rational)>;

/// Text used for the goal observation in files and listings.
pub const GOAL_MARK: &str = "✓";

/// Sorts by index, merges duplicates and drops zero entries.
pub fn normalize(mut d: Distribution) -> Distribution {
    d.sort_by_key(|(i, _)| *i);
    let mut out: Distribution = Vec::with_capacity(d.len());
    for (i, p) in d {
        match out.last_mut() {
            Some((j, q)) if *j == i => *q += p,
            _ => out.push((i, p)),
        }
    }
    out.retain(|(_, p)| !p.is_zero());
    out
}

pub fn dirac(i: usize) -> Distribution {
    vec![(i, Rational::one())]
}

pub fn uniform(targets: &[usize]) -> Distribution {
    let p = Rational::new(1.into(), targets.len().into());
    normalize(targets.iter().map(|&t| (t, p.clone())).collect())
}

fn mass(d: &Distribution) -> Rational {
    d.iter().map(|(_, p)| p).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    NoActions,
    EmptyGoal,
    EmptyInitial,
    DuplicateState(String),
    DuplicateAction(String),
    NegativeReward {
        state: String,
        reward: Rational,
    },
    MissingTransition {
        state: String,
        action: String,
    },
    NegativeProbability {
        state: String,
        action: String,
        target: String,
    },
    RowSum {
        state: String,
        action: String,
        sum: Rational,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => f.write_str("no states"),
            Violation::NoActions => f.write_str("no actions"),
            Violation::EmptyGoal => f.write_str("empty goal set"),
            Violation::EmptyInitial => f.write_str("empty initial set"),
            Violation::DuplicateState(s) => write!(f, "duplicate state {s:?}"),
            Violation::DuplicateAction(a) => write!(f, "duplicate action {a:?}"),
            Violation::NegativeReward { state, reward } => {
                write!(f, "negative reward {} at {state}", fmt_rational(reward))
            }
            Violation::MissingTransition { state, action } => {
                write!(f, "missing transition for ({state}, {action})")
            }
            Violation::NegativeProbability {
                state,
                action,
                target,
            } => {
                write!(f, "negative probability ({state}, {action}) -> {target}")
            }
            Violation::RowSum { state, action, sum } => {
                write!(
                    f,
                    "row ({state}, {action}) sums to {} instead of 1",
                    fmt_rational(sum)
                )
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("strategy has no entry for {0}")]
    MissingStrategyEntry(String),
    #[error("strategy entry for {0} is not a distribution over actions")]
    NotADistribution(String),
    #[error("observation function covers {got} states, model has {expected}")]
    ObservationArity { got: usize, expected: usize },
    #[error("state {0} is a goal state but is not mapped to the goal mark")]
    GoalNotMarked(String),
    #[error("state {0} is not a goal state but is mapped to the goal mark")]
    MarkedNonGoal(String),
    #[error("observation label index {0} out of range")]
    LabelOutOfRange(usize),
    #[error("empty action subset")]
    EmptyActionSet,
    #[error("{0}")]
    Precondition(String),
}

/// A Markov decision process with a uniform initial distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<String>,
    initial: Vec<usize>,
    goal: Vec<usize>,
    is_goal: Vec<bool>,
    trans: Vec<Vec<Distribution>>,
    rewards: Vec<Rational>,
}

impl Mdp {
    /// Assembles a model without validating it; see [`Mdp::validate`].
    /// `trans[s][a]` must exist for every pair; an empty distribution marks a
    /// missing transition.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        initial: Vec<usize>,
        goal: Vec<usize>,
        trans: Vec<Vec<Distribution>>,
        rewards: Vec<Rational>,
    ) -> Self {
        assert_eq!(trans.len(), states.len(), "one transition row per state");
        assert!(
            trans.iter().all(|r| r.len() == actions.len()),
            "one distribution per action"
        );
        assert_eq!(rewards.len(), states.len(), "one reward per state");
        let mut initial = initial;
        initial.sort_unstable();
        initial.dedup();
        let mut goal = goal;
        goal.sort_unstable();
        goal.dedup();
        let mut is_goal = vec![false; states.len()];
        for &g in &goal {
            is_goal[g] = true;
        }
        let trans = trans
            .into_iter()
            .map(|row| row.into_iter().map(normalize).collect())
            .collect();
        Mdp {
            states,
            actions,
            initial,
            goal,
            is_goal,
            trans,
            rewards,
        }
    }

    /// Validated constructor.
    pub fn try_new(
        states: Vec<String>,
        actions: Vec<String>,
        initial: Vec<usize>,
        goal: Vec<usize>,
        trans: Vec<Vec<Distribution>>,
        rewards: Vec<Rational>,
    ) -> Result<Self, ModelError> {
        let m = Mdp::new(states, actions, initial, goal, trans, rewards);
        m.validate().map_err(ModelError::Invalid)?;
        Ok(m)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn state_names(&self) -> &[String] {
        &self.states
    }
    pub fn action_names(&self) -> &[String] {
        &self.actions
    }
    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }
    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }
    pub fn initial(&self) -> &[usize] {
        &self.initial
    }
    pub fn goal(&self) -> &[usize] {
        &self.goal
    }
    pub fn is_goal(&self, s: usize) -> bool {
        self.is_goal[s]
    }
    pub fn goal_flags(&self) -> &[bool] {
        &self.is_goal
    }
    pub fn reward(&self, s: usize) -> &Rational {
        &self.rewards[s]
    }
    pub fn rewards(&self) -> &[Rational] {
        &self.rewards
    }
    pub fn transition(&self, s: usize, a: usize) -> &Distribution {
        &self.trans[s][a]
    }

    /// Non-goal states in declaration order.
    pub fn non_goal_states(&self) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| !self.is_goal[s])
            .collect()
    }

    pub fn state_index(&self, name: &str) -> Result<usize, ModelError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn action_index(&self, name: &str) -> Result<usize, ModelError> {
        self.actions
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| ModelError::UnknownAction(name.to_string()))
    }

    /// Reports every invariant violation, not just the first.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push(Violation::NoStates);
        }
        if self.actions.is_empty() {
            out.push(Violation::NoActions);
        }
        if self.goal.is_empty() {
            out.push(Violation::EmptyGoal);
        }
        if self.initial.is_empty() {
            out.push(Violation::EmptyInitial);
        }
        let mut seen = HashSet::new();
        for s in &self.states {
            if !seen.insert(s) {
                out.push(Violation::DuplicateState(s.clone()));
            }
        }
        let mut seen = HashSet::new();
        for a in &self.actions {
            if !seen.insert(a) {
                out.push(Violation::DuplicateAction(a.clone()));
            }
        }
        for (s, r) in self.rewards.iter().enumerate() {
            if r.is_negative() {
                out.push(Violation::NegativeReward {
                    state: self.states[s].clone(),
                    reward: r.clone(),
                });
            }
        }
        for (s, row) in self.trans.iter().enumerate() {
            for (a, d) in row.iter().enumerate() {
                let (state, action) = (self.states[s].clone(), self.actions[a].clone());
                if d.is_empty() {
                    out.push(Violation::MissingTransition { state, action });
                    continue;
                }
                for (t, p) in d {
                    if p.is_negative() {
                        out.push(Violation::NegativeProbability {
                            state: state.clone(),
                            action: action.clone(),
                            target: self.states[*t].clone(),
                        });
                    }
                }
                let sum = mass(d);
                if !sum.is_one() {
                    out.push(Violation::RowSum { state, action, sum });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Keeps only the actions in `subset` (indices, in the given order).
    pub fn restrict_actions(&self, subset: &[usize]) -> Result<Mdp, ModelError> {
        if subset.is_empty() {
            return Err(ModelError::EmptyActionSet);
        }
        if let Some(&a) = subset.iter().find(|&&a| a >= self.num_actions()) {
            return Err(ModelError::UnknownAction(format!("#{a}")));
        }
        Ok(Mdp {
            actions: subset.iter().map(|&a| self.actions[a].clone()).collect(),
            trans: self
                .trans
                .iter()
                .map(|row| subset.iter().map(|&a| row[a].clone()).collect())
                .collect(),
            ..self.clone()
        })
    }

    /// The chain induced by a positional strategy over states.
    pub fn induced_dtmc(&self, sigma: &RandStrategy) -> Result<Dtmc, ModelError> {
        if sigma.len() < self.num_states() {
            return Err(ModelError::MissingStrategyEntry(
                self.states[sigma.len()].clone(),
            ));
        }
        let mut rows = Vec::with_capacity(self.num_states());
        for s in 0..self.num_states() {
            let choice = sigma.at(s);
            check_action_distribution(choice, self.num_actions())
                .map_err(|_| ModelError::NotADistribution(self.states[s].clone()))?;
            rows.push(mix(choice.iter().map(|(a, w)| (w, &self.trans[s][*a]))));
        }
        Ok(self.chain_with_rows(rows))
    }

    pub(crate) fn chain_with_rows(&self, rows: Vec<Distribution>) -> Dtmc {
        Dtmc {
            states: self.states.clone(),
            initial: self.initial.clone(),
            goal: self.goal.clone(),
            is_goal: self.is_goal.clone(),
            trans: rows,
            rewards: self.rewards.clone(),
        }
    }
}

fn check_action_distribution(d: &Distribution, n_actions: usize) -> Result<(), ()> {
    let ok = !d.is_empty()
        && d.iter().all(|(a, p)| *a < n_actions && !p.is_negative())
        && mass(d).is_one();
    if ok {
        Ok(())
    } else {
        Err(())
    }
}

/// `Σ w · d` over weighted distributions.
pub(crate) fn mix<'a>(
    parts: impl Iterator<Item = (&'a Rational, &'a Distribution)>,
) -> Distribution {
    let mut acc = Vec::new();
    for (w, d) in parts {
        if w.is_zero() {
            continue;
        }
        acc.extend(d.iter().map(|(t, p)| (*t, p * w)));
    }
    normalize(acc)
}

/// A discrete-time Markov chain: an MDP without choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtmc {
    states: Vec<String>,
    initial: Vec<usize>,
    goal: Vec<usize>,
    is_goal: Vec<bool>,
    trans: Vec<Distribution>,
    rewards: Vec<Rational>,
}

impl Dtmc {
    pub fn new(
        states: Vec<String>,
        initial: Vec<usize>,
        goal: Vec<usize>,
        trans: Vec<Distribution>,
        rewards: Vec<Rational>,
    ) -> Self {
        assert_eq!(trans.len(), states.len());
        assert_eq!(rewards.len(), states.len());
        let mut is_goal = vec![false; states.len()];
        for &g in &goal {
            is_goal[g] = true;
        }
        let mut initial = initial;
        initial.sort_unstable();
        initial.dedup();
        let mut goal = goal;
        goal.sort_unstable();
        goal.dedup();
        let trans = trans.into_iter().map(normalize).collect();
        Dtmc {
            states,
            initial,
            goal,
            is_goal,
            trans,
            rewards,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn state_names(&self) -> &[String] {
        &self.states
    }
    pub fn initial(&self) -> &[usize] {
        &self.initial
    }
    pub fn goal(&self) -> &[usize] {
        &self.goal
    }
    pub fn is_goal(&self, s: usize) -> bool {
        self.is_goal[s]
    }
    pub fn goal_flags(&self) -> &[bool] {
        &self.is_goal
    }
    pub fn rewards(&self) -> &[Rational] {
        &self.rewards
    }
    pub fn row(&self, s: usize) -> &Distribution {
        &self.trans[s]
    }

    /// Rows that do not sum to exactly one, or carry negative entries.
    pub fn bad_rows(&self) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| {
                let r = &self.trans[s];
                !mass(r).is_one() || r.iter().any(|(_, p)| p.is_negative())
            })
            .collect()
    }

    /// Same chain with every goal row replaced by a self-loop.
    pub fn with_absorbing_goals(mut self) -> Self {
        for &g in &self.goal {
            self.trans[g] = dirac(g);
        }
        self
    }
}

/// Observation of a single state: a label index or the goal mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Obs {
    Goal,
    Label(usize),
}

/// Maps every state to a label in `labels` or to the goal mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationFunction {
    labels: Vec<String>,
    map: Vec<Obs>,
}

impl ObservationFunction {
    pub fn new(labels: Vec<String>, map: Vec<Obs>) -> Result<Self, ModelError> {
        if let Some(Obs::Label(i)) = map
            .iter()
            .find(|o| matches!(o, Obs::Label(i) if *i >= labels.len()))
        {
            return Err(ModelError::LabelOutOfRange(*i));
        }
        Ok(ObservationFunction { labels, map })
    }

    /// Labels `o1, o2, ...` from a block assignment over the non-goal states.
    pub fn from_blocks(m: &Mdp, blocks: &[usize]) -> Self {
        let k = blocks.iter().map(|b| b + 1).max().unwrap_or(0);
        let labels = (1..=k).map(|i| format!("o{i}")).collect();
        let mut map = vec![Obs::Goal; m.num_states()];
        for (s, b) in m.non_goal_states().into_iter().zip(blocks) {
            map[s] = Obs::Label(*b);
        }
        ObservationFunction { labels, map }
    }

    /// One label per non-goal state, named after the state.
    pub fn identity(m: &Mdp) -> Self {
        let ng = m.non_goal_states();
        let labels = ng.iter().map(|&s| m.state_name(s).to_string()).collect();
        let mut map = vec![Obs::Goal; m.num_states()];
        for (i, &s) in ng.iter().enumerate() {
            map[s] = Obs::Label(i);
        }
        ObservationFunction { labels, map }
    }

    /// Builds from `(state name, label)` pairs; unnamed goal states get the
    /// goal mark and labels are ordered by first appearance.
    pub fn from_pairs(m: &Mdp, pairs: &[(&str, &str)]) -> Result<Self, ModelError> {
        let mut labels: Vec<String> = Vec::new();
        let mut map = vec![None; m.num_states()];
        for (state, label) in pairs {
            let s = m.state_index(state)?;
            map[s] = Some(if *label == GOAL_MARK {
                Obs::Goal
            } else {
                let i = labels.iter().position(|l| l == label).unwrap_or_else(|| {
                    labels.push(label.to_string());
                    labels.len() - 1
                });
                Obs::Label(i)
            });
        }
        let mut full = Vec::with_capacity(m.num_states());
        for (s, o) in map.into_iter().enumerate() {
            match o {
                Some(o) => full.push(o),
                None if m.is_goal(s) => full.push(Obs::Goal),
                None => {
                    return Err(ModelError::Precondition(format!(
                        "no observation for state {}",
                        m.state_name(s)
                    )))
                }
            }
        }
        Ok(ObservationFunction { labels, map: full })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }
    pub fn get(&self, s: usize) -> Obs {
        self.map[s]
    }
    pub fn map(&self) -> &[Obs] {
        &self.map
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    /// Display text of the observation of `s`.
    pub fn text(&self, s: usize) -> &str {
        match self.map[s] {
            Obs::Goal => GOAL_MARK,
            Obs::Label(i) => &self.labels[i],
        }
    }

    /// Number of distinct labels actually used.
    pub fn used_labels(&self) -> usize {
        let used: HashSet<usize> = self
            .map
            .iter()
            .filter_map(|o| match o {
                Obs::Label(i) => Some(*i),
                Obs::Goal => None,
            })
            .collect();
        used.len()
    }

    /// Drops unused labels, keeping the order of the remaining ones. Returns
    /// the canonical function and, for each old label, its new index.
    pub fn canonical(&self) -> (Self, Vec<Option<usize>>) {
        let mut used = vec![false; self.labels.len()];
        for o in &self.map {
            if let Obs::Label(i) = o {
                used[*i] = true;
            }
        }
        let mut remap = vec![None; self.labels.len()];
        let mut labels = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if used[i] {
                remap[i] = Some(labels.len());
                labels.push(l.clone());
            }
        }
        let map = self
            .map
            .iter()
            .map(|o| match o {
                Obs::Label(i) => Obs::Label(remap[*i].unwrap()),
                Obs::Goal => Obs::Goal,
            })
            .collect();
        (ObservationFunction { labels, map }, remap)
    }
}

/// Deterministic positional strategy: domain index (state or label) to action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetStrategy(pub Vec<usize>);

impl DetStrategy {
    pub fn to_rand(&self) -> RandStrategy {
        RandStrategy(self.0.iter().map(|&a| dirac(a)).collect())
    }
}

/// Randomized positional strategy: domain index to a distribution over actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandStrategy(pub Vec<Distribution>);

impl RandStrategy {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn at(&self, i: usize) -> &Distribution {
        &self.0[i]
    }

    pub fn uniform(domain: usize, n_actions: usize) -> Self {
        let all: Vec<usize> = (0..n_actions).collect();
        RandStrategy(vec![uniform(&all); domain])
    }

    /// `Some` when every entry is a Dirac distribution.
    pub fn as_deterministic(&self) -> Option<DetStrategy> {
        self.0
            .iter()
            .map(|d| match d.as_slice() {
                [(a, p)] if p.is_one() => Some(*a),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(DetStrategy)
    }
}

/// An MDP together with an observation function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pomdp {
    pub mdp: Mdp,
    pub obs: ObservationFunction,
}

pub fn apply_observation(m: &Mdp, obs: &ObservationFunction) -> Result<Pomdp, ModelError> {
    if obs.map.len() != m.num_states() {
        return Err(ModelError::ObservationArity {
            got: obs.map.len(),
            expected: m.num_states(),
        });
    }
    for s in 0..m.num_states() {
        match (m.is_goal(s), obs.map[s]) {
            (true, Obs::Label(_)) => return Err(ModelError::GoalNotMarked(m.state_name(s).into())),
            (false, Obs::Goal) => return Err(ModelError::MarkedNonGoal(m.state_name(s).into())),
            _ => {}
        }
    }
    Ok(Pomdp {
        mdp: m.clone(),
        obs: obs.clone(),
    })
}

impl Pomdp {
    /// Lifts a strategy over labels to states. Goal states, whose rows are
    /// replaced by self-loops in [`Pomdp::induced_dtmc`], receive the first action.
    pub fn lift(&self, sigma: &RandStrategy) -> Result<RandStrategy, ModelError> {
        let n_act = self.mdp.num_actions();
        let mut out = Vec::with_capacity(self.mdp.num_states());
        for s in 0..self.mdp.num_states() {
            out.push(match self.obs.get(s) {
                Obs::Goal => dirac(0),
                Obs::Label(o) => {
                    let label = self.obs.label(o);
                    let d = sigma
                        .0
                        .get(o)
                        .ok_or_else(|| ModelError::MissingStrategyEntry(label.into()))?;
                    check_action_distribution(d, n_act)
                        .map_err(|_| ModelError::NotADistribution(label.into()))?;
                    d.clone()
                }
            });
        }
        Ok(RandStrategy(out))
    }

    /// The chain `M[obs][σ]` with goal states made absorbing, matching the
    /// reward semantics (accumulation stops at the first goal visit).
    pub fn induced_dtmc(&self, sigma: &RandStrategy) -> Result<Dtmc, ModelError> {
        let lifted = self.lift(sigma)?;
        Ok(self.mdp.induced_dtmc(&lifted)?.with_absorbing_goals())
    }
}
