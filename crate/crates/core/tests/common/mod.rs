//! Shared helpers for the integration tests.

#![allow(dead_code)]

use obsyn::model::{dirac, Distribution, Mdp, Obs, ObservationFunction, Pomdp, RandStrategy};
use obsyn::rational::{int, ratio, Rational};
use obsyn::tpmc::{Instantiation, Relation, Tpmc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution over `0..k` with small denominators; `support`
/// limits the number of nonzero entries.
pub fn random_distribution(rng: &mut impl Rng, k: usize, support: usize) -> Distribution {
    let mut targets: Vec<usize> = (0..k).collect();
    targets.shuffle(rng);
    targets.truncate(rng.gen_range(1..=support.min(k)));
    let weights: Vec<i64> = targets.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let mut d: Distribution = targets
        .into_iter()
        .zip(weights)
        .map(|(t, w)| (t, ratio(w, total)))
        .collect();
    d.sort_by_key(|(t, _)| *t);
    d
}

/// A random MDP: `goals` absorbing goal states at the end, rewards in
/// {1, 2, 1/2} off the goal, successors drawn from all
/// states with at most `branching` targets per action.
pub fn random_mdp(
    rng: &mut impl Rng,
    n: usize,
    goals: usize,
    actions: usize,
    branching: usize,
) -> Mdp {
    let inner = n - goals;
    let trans = (0..n)
        .map(|s| {
            (0..actions)
                .map(|_| {
                    if s >= inner {
                        dirac(s)
                    } else {
                        random_distribution(rng, n, branching)
                    }
                })
                .collect()
        })
        .collect();
    let rewards = (0..n)
        .map(|s| {
            if s >= inner {
                int(0)
            } else {
                [int(1), int(2), ratio(1, 2)][rng.gen_range(0..3)].clone()
            }
        })
        .collect();
    let mut initial: Vec<usize> = (0..inner).filter(|_| rng.gen_bool(0.5)).collect();
    if initial.is_empty() {
        initial.push(0);
    }
    Mdp::new(
        (0..n).map(|s| format!("s{s}")).collect(),
        (0..actions).map(|a| format!("a{a}")).collect(),
        initial,
        (inner..n).collect(),
        trans,
        rewards,
    )
}

/// A random observation function with labels `o1..oB` (not all need be
/// used).
pub fn random_observation(rng: &mut impl Rng, m: &Mdp, budget: usize) -> ObservationFunction {
    let map = (0..m.num_states())
        .map(|s| {
            if m.is_goal(s) {
                Obs::Goal
            } else {
                Obs::Label(rng.gen_range(0..budget))
            }
        })
        .collect();
    ObservationFunction::new((1..=budget).map(|o| format!("o{o}")).collect(), map).unwrap()
}

pub fn random_strategy(rng: &mut impl Rng, labels: usize, actions: usize) -> RandStrategy {
    RandStrategy(
        (0..labels)
            .map(|_| random_distribution(rng, actions, actions))
            .collect(),
    )
}

/// A random instantiation satisfying every group constraint: booleans in
/// an equality group are one-hot, booleans in an at-most group form a
/// random subset of allowed size, reals in a group form a distribution.
pub fn random_instantiation(rng: &mut impl Rng, t: &Tpmc) -> Instantiation {
    let mut values = vec![Rational::from_integer(0.into()); t.vars.len()];
    for (g, group) in t.groups.iter().enumerate() {
        let members: Vec<usize> = (0..t.vars.len())
            .filter(|&v| t.vars[v].kind.group() == Some(g))
            .collect();
        if members.is_empty() {
            continue;
        }
        let cap = group.constant.to_integer().try_into().unwrap_or(usize::MAX);
        if t.vars[members[0]].kind.is_bool() {
            let count = match group.relation {
                Relation::Equal => cap,
                Relation::AtMost => rng.gen_range(0..=cap.min(members.len())),
            };
            let mut chosen = members.clone();
            chosen.shuffle(rng);
            for &v in chosen.iter().take(count) {
                values[v] = int(1);
            }
        } else {
            for (i, q) in random_distribution(rng, members.len(), members.len()) {
                values[members[i]] = q * &group.constant;
            }
        }
    }
    for (v, var) in t.vars.iter().enumerate() {
        if var.kind.group().is_none() {
            values[v] = if var.kind.is_bool() {
                int(rng.gen_range(0..=1))
            } else {
                ratio(rng.gen_range(0..=3), 3)
            };
        }
    }
    Instantiation(values)
}

/// Every POMDP with `n` states (the last `goals` of them absorbing goals),
/// two actions with Dirac transitions, rewards in {0, 1} on non-goal states
/// and a surjective two-label observation of the non-goal states, up to
/// swapping the labels. The initial set is either the first state or all
/// non-goal states.
pub fn small_pomdps(n: usize, goals: usize) -> impl Iterator<Item = Pomdp> {
    let inner = n - goals;
    let n_trans = n.pow(2 * inner as u32);
    (0..n_trans)
        .flat_map(move |code| {
            (0..1usize << inner).flat_map(move |rewards| {
                // the first non-goal state always gets label 0
                (0..1usize << (inner - 1)).filter_map(move |labels| {
                    let labels = labels << 1;
                    if labels == 0 {
                        return None;
                    }
                    Some([true, false].map(|all| build(n, goals, code, rewards, labels, all)))
                })
            })
        })
        .flatten()
}

fn build(
    n: usize,
    goals: usize,
    code: usize,
    rewards: usize,
    labels: usize,
    all_initial: bool,
) -> Pomdp {
    let inner = n - goals;
    let mut c = code;
    let trans: Vec<Vec<_>> = (0..n)
        .map(|s| {
            (0..2)
                .map(|_| {
                    if s >= inner {
                        dirac(s)
                    } else {
                        let t = c % n;
                        c /= n;
                        dirac(t)
                    }
                })
                .collect()
        })
        .collect();
    let rew = (0..n)
        .map(|s| int(i64::from(s < inner && rewards >> s & 1 == 1)))
        .collect();
    let initial = if all_initial {
        (0..inner).collect()
    } else {
        vec![0]
    };
    let m = Mdp::new(
        (0..n).map(|s| format!("q{s}")).collect(),
        vec!["a".into(), "b".into()],
        initial,
        (inner..n).collect(),
        trans,
        rew,
    );
    let map = (0..n)
        .map(|s| {
            if s >= inner {
                Obs::Goal
            } else {
                Obs::Label(labels >> s & 1)
            }
        })
        .collect();
    let obs = ObservationFunction::new(vec!["u".into(), "v".into()], map).unwrap();
    Pomdp { mdp: m, obs }
}

/// Number of POMDPs [`small_pomdps`] yields.
pub fn small_pomdp_count(n: usize, goals: usize) -> usize {
    let inner = n - goals;
    n.pow(2 * inner as u32) * (1 << inner) * ((1 << (inner - 1)) - 1) * 2
}
