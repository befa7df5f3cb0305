//! Reduction from policy existence on a POMDP to observation synthesis on an
//! MDP with budget `|O|`.
//!
//! Besides the original states, the new MDP has one state `s_o` per label
//! plus `s_τ` and `s_∞`. Actions are tagged with labels (`α_o`); a state that
//! receives an action with the wrong tag falls into `s_∞`, which pays reward 1
//! forever. The `s_o` states are initial, and a label-`o` action moves them on
//! to `s_τ`, which collects reward `τ` and then enters the goal. Any budget-`|O|`
//! observation function must therefore separate the `s_o`, and the original
//! states are forced to act like their assigned label.

use num_traits::{Signed, Zero};

use super::TpmcError;
use crate::model::{dirac, uniform, Distribution, Mdp, Obs, Pomdp};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionVariant {
    /// `s_o` moves uniformly to the other tagged states and `s_τ`; `s_τ`
    /// moves uniformly to the goal states.
    General,
    /// `s_o` moves straight to `s_τ`; `s_τ` moves to the first goal state.
    Positional,
}

pub fn build_policy_reduction(
    p: &Pomdp,
    tau: &Rational,
    variant: ReductionVariant,
) -> Result<Mdp, TpmcError> {
    let m = &p.mdp;
    let obs = &p.obs;
    if m.goal().is_empty() {
        return Err(TpmcError::Precondition("the goal set is empty".into()));
    }
    if obs.used_labels() != obs.num_labels() {
        return Err(TpmcError::Precondition(
            "every observation label must be used".into(),
        ));
    }
    if tau.is_negative() {
        return Err(TpmcError::Precondition(
            "the threshold must be nonnegative".into(),
        ));
    }
    let n = m.num_states();
    let k = obs.num_labels();
    let tagged = |o: usize| n + o;
    let s_tau = n + k;
    let s_inf = n + k + 1;

    let mut states: Vec<String> = m.state_names().to_vec();
    states.extend(obs.labels().iter().map(|l| format!("s_{l}")));
    states.push("s_tau".into());
    states.push("s_inf".into());
    if let Some(dup) = states.iter().skip(n).find(|x| m.state_names().contains(x)) {
        return Err(TpmcError::Precondition(format!(
            "state name {dup} is already taken"
        )));
    }

    let mut actions = Vec::with_capacity(m.num_actions() * k);
    for l in obs.labels() {
        for a in m.action_names() {
            actions.push(format!("{a}_{l}"));
        }
    }
    // action index of α_o
    let tag_of = |act: usize| act / m.num_actions();
    let base_of = |act: usize| act % m.num_actions();

    let after_tagged: Distribution = match variant {
        ReductionVariant::General => {
            let mut targets: Vec<usize> = (0..k).map(tagged).collect();
            targets.push(s_tau);
            uniform(&targets)
        }
        ReductionVariant::Positional => dirac(s_tau),
    };
    let after_tau: Distribution = match variant {
        ReductionVariant::General => uniform(m.goal()),
        ReductionVariant::Positional => dirac(m.goal()[0]),
    };

    let trans = (0..n + k + 2)
        .map(|s| {
            (0..actions.len())
                .map(|act| {
                    let (o, a) = (tag_of(act), base_of(act));
                    if s < n {
                        match obs.get(s) {
                            Obs::Goal => m.transition(s, a).clone(),
                            Obs::Label(l) if l == o => m.transition(s, a).clone(),
                            Obs::Label(_) => dirac(s_inf),
                        }
                    } else if s < s_tau {
                        if s - n == o {
                            after_tagged.clone()
                        } else {
                            dirac(s_inf)
                        }
                    } else if s == s_tau {
                        after_tau.clone()
                    } else {
                        dirac(s_inf)
                    }
                })
                .collect()
        })
        .collect();

    let mut rewards: Vec<Rational> = m.rewards().to_vec();
    rewards.extend((0..k).map(|_| Rational::zero()));
    rewards.push(tau.clone());
    rewards.push(Rational::from_integer(1.into()));

    let mut initial = m.initial().to_vec();
    initial.extend((0..k).map(tagged));
    Ok(Mdp::try_new(
        states,
        actions,
        initial,
        m.goal().to_vec(),
        trans,
        rewards,
    )?)
}
