//! Exact expected rewards on Markov chains and exact optima on MDPs.
//!
//! Rewards accumulate until the first goal visit; the value of a chain is the
//! average over its initial states, and `∞` as soon as one initial state
//! misses the goal with positive probability (regardless of rewards).

pub mod graph;
pub mod linear;

use num_traits::{One, Zero};

use crate::model::{
    apply_observation, DetStrategy, Distribution, Dtmc, Mdp, ModelError, ObservationFunction,
    RandStrategy,
};
use crate::rational::{Rational, Value};

/// Per-state expected rewards, `0` on goals.
pub type StateValues = Vec<Value>;

/// Exact expected rewards of a chain given by `row`, goals treated as absorbing.
pub(crate) fn solve_chain<'a, F>(
    n: usize,
    is_goal: &[bool],
    initial: &[usize],
    rewards: &[Rational],
    row: F,
) -> (Value, StateValues)
where
    F: Fn(usize) -> &'a Distribution + Copy,
{
    let sure = graph::almost_sure(n, is_goal, row);
    let open: Vec<bool> = (0..n).map(|s| sure[s] && !is_goal[s]).collect();
    let mut val: Vec<Option<Rational>> = (0..n).map(|s| is_goal[s].then(Rational::zero)).collect();

    for comp in graph::sccs(n, &open, row) {
        if let [s] = comp[..] {
            let mut stay = Rational::zero();
            let mut rhs = rewards[s].clone();
            for (t, p) in row(s) {
                if *t == s {
                    stay += p;
                } else {
                    rhs += p * val[*t].as_ref().expect("successor solved earlier");
                }
            }
            val[s] = Some(rhs / (Rational::one() - stay));
            continue;
        }
        let local = |t: usize| comp.binary_search(&t).ok();
        let k = comp.len();
        let mut a = vec![vec![Rational::zero(); k]; k];
        let mut b = Vec::with_capacity(k);
        for (i, &s) in comp.iter().enumerate() {
            a[i][i] = Rational::one();
            let mut rhs = rewards[s].clone();
            for (t, p) in row(s) {
                match local(*t) {
                    Some(j) => a[i][j] -= p,
                    None => rhs += p * val[*t].as_ref().expect("successor solved earlier"),
                }
            }
            b.push(rhs);
        }
        // regular: every state in the component leaves it with positive probability
        let x = linear::solve(&a, &b).expect("almost-sure component yields a regular system");
        for (s, v) in comp.iter().zip(x) {
            val[*s] = Some(v);
        }
    }

    let per_state: StateValues = val
        .into_iter()
        .map(|v| v.map_or(Value::Infinite, Value::Finite))
        .collect();
    let value = average(initial, &per_state);
    (value, per_state)
}

fn average(initial: &[usize], per_state: &[Value]) -> Value {
    if initial.is_empty() {
        return Value::zero();
    }
    let mut sum = Rational::zero();
    for &s in initial {
        match &per_state[s] {
            Value::Finite(q) => sum += q,
            Value::Infinite => return Value::Infinite,
        }
    }
    Value::Finite(sum / Rational::from_integer(initial.len().into()))
}

/// States from which the goal is reached with probability one.
pub fn almost_sure_reach(d: &Dtmc) -> Vec<usize> {
    let sure = graph::almost_sure(d.num_states(), d.goal_flags(), |s| d.row(s));
    (0..d.num_states()).filter(|&s| sure[s]).collect()
}

pub fn dtmc_expected_reward(d: &Dtmc) -> (Value, StateValues) {
    solve_chain(
        d.num_states(),
        d.goal_flags(),
        d.initial(),
        d.rewards(),
        |s| d.row(s),
    )
}

/// Value only of a deterministic positional strategy over states. Decides
/// `∞` from the graph alone before solving anything.
pub fn evaluate_det_value(m: &Mdp, sigma: &[usize]) -> Value {
    let row = |s: usize| m.transition(s, sigma[s]);
    let sure = graph::almost_sure(m.num_states(), m.goal_flags(), row);
    if m.initial().iter().any(|&s| !sure[s]) {
        return Value::Infinite;
    }
    solve_chain(
        m.num_states(),
        m.goal_flags(),
        m.initial(),
        m.rewards(),
        row,
    )
    .0
}

/// Value of a deterministic positional strategy over states.
pub fn evaluate_det(m: &Mdp, sigma: &[usize]) -> (Value, StateValues) {
    solve_chain(
        m.num_states(),
        m.goal_flags(),
        m.initial(),
        m.rewards(),
        |s| m.transition(s, sigma[s]),
    )
}

/// Value of an observation-based strategy: `σ` is indexed by the labels of
/// `obs` and lifted to states before evaluation.
pub fn evaluate_obs_strategy(
    m: &Mdp,
    obs: &ObservationFunction,
    sigma: &RandStrategy,
) -> Result<Value, ModelError> {
    let p = apply_observation(m, obs)?;
    Ok(dtmc_expected_reward(&p.induced_dtmc(sigma)?).0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdpOptimum {
    pub value: Value,
    /// Optimal choice per state; goal states and states without a proper
    /// strategy get the first action.
    pub strategy: DetStrategy,
    pub per_state: StateValues,
}

/// States from which some strategy reaches the goal almost surely, and for
/// each state the actions whose successors all stay inside that set.
fn prob1_states(m: &Mdp) -> (Vec<bool>, Vec<Vec<usize>>) {
    let n = m.num_states();
    let mut inside = vec![true; n];
    loop {
        let safe: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                (0..m.num_actions())
                    .filter(|&a| m.transition(s, a).iter().all(|(t, _)| inside[*t]))
                    .collect()
            })
            .collect();
        // backward search from the goal along safe actions
        let mut reach: Vec<bool> = m.goal_flags().to_vec();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if reach[s] || !inside[s] {
                    continue;
                }
                if safe[s]
                    .iter()
                    .any(|&a| m.transition(s, a).iter().any(|(t, _)| reach[*t]))
                {
                    reach[s] = true;
                    changed = true;
                }
            }
        }
        if reach == inside {
            return (inside, safe);
        }
        inside = reach;
    }
}

/// Minimal expected reward over positional strategies, with an optimal
/// deterministic witness, by policy iteration on exact values.
pub fn mdp_min_expected_reward(m: &Mdp) -> MdpOptimum {
    let n = m.num_states();
    let (inside, safe) = prob1_states(m);

    // proper initial policy: each state steps towards a state settled earlier
    let mut sigma = vec![0usize; n];
    let mut settled: Vec<bool> = m.goal_flags().to_vec();
    loop {
        let layer: Vec<(usize, usize)> = (0..n)
            .filter(|&s| inside[s] && !settled[s])
            .filter_map(|s| {
                safe[s]
                    .iter()
                    .find(|&&a| m.transition(s, a).iter().any(|(t, _)| settled[*t]))
                    .map(|&a| (s, a))
            })
            .collect();
        if layer.is_empty() {
            break;
        }
        for (s, a) in layer {
            sigma[s] = a;
            settled[s] = true;
        }
    }

    loop {
        let (_, values) = evaluate_det(m, &sigma);
        let mut improved = false;
        for s in (0..n).filter(|&s| inside[s] && !m.is_goal(s)) {
            let current = values[s]
                .finite()
                .expect("proper policy has finite values inside")
                .clone();
            let mut best: Option<(usize, Rational)> = None;
            for &a in &safe[s] {
                let mut q = m.reward(s).clone();
                for (t, p) in m.transition(s, a) {
                    q += p * values[*t].finite().expect("safe successors are inside");
                }
                if best.as_ref().is_none_or(|(_, b)| &q < b) {
                    best = Some((a, q));
                }
            }
            let (a, q) = best.expect("inside states keep a safe action");
            if q < current {
                sigma[s] = a;
                improved = true;
            }
        }
        if !improved {
            let (value, per_state) = evaluate_det(m, &sigma);
            return MdpOptimum {
                value,
                strategy: DetStrategy(sigma),
                per_state,
            };
        }
    }
}
