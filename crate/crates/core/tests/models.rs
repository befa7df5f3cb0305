//! Properties of the model generators and the exact analysis.

mod common;

use num_traits::{One, Zero};
use obsyn::analysis::{
    almost_sure_reach, dtmc_expected_reward, evaluate_det, evaluate_obs_strategy,
    mdp_min_expected_reward,
};
use obsyn::format::{load_model, store_model};
use obsyn::generate::{generate_benchmark, grid, line, maze, Family};
use obsyn::model::{DetStrategy, Dtmc, Mdp};
use obsyn::rational::{int, ratio, Rational, Value};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Line),
        Just(Family::LineSink),
        Just(Family::Grid),
        Just(Family::Maze)
    ]
}

fn expected_states(family: Family, size: usize) -> usize {
    match family {
        Family::Line => size,
        Family::LineSink => size + 1,
        Family::Grid => size * size,
        Family::Maze => 3 * (3 + (size - 5) / 2 - 1) + size,
    }
}

fn row_sum(d: &[(usize, Rational)]) -> Rational {
    d.iter().map(|(_, p)| p).sum()
}

/// `x ← r + P x` from zero, on a chain whose non-goal states reach the goal
/// almost surely.
fn value_iteration(d: &Dtmc, steps: usize) -> Vec<Vec<Rational>> {
    let n = d.num_states();
    let mut x = vec![Rational::zero(); n];
    let mut trace = vec![x.clone()];
    for _ in 0..steps {
        x = (0..n)
            .map(|s| {
                if d.is_goal(s) {
                    return Rational::zero();
                }
                d.row(s)
                    .iter()
                    .fold(d.rewards()[s].clone(), |acc, (t, p)| acc + p * &x[*t])
            })
            .collect();
        trace.push(x.clone());
    }
    trace
}

#[test]
fn generated_models_are_valid_with_the_right_size() {
    for (family, sizes) in [
        (Family::Line, vec![3, 5, 9, 41]),
        (Family::LineSink, vec![3, 7, 15]),
        (Family::Grid, vec![2, 3, 6, 10]),
        (Family::Maze, vec![5, 7, 9, 15, 39]),
    ] {
        for size in sizes {
            for p in [int(1), ratio(1, 2), ratio(99, 100)] {
                let Ok(m) = generate_benchmark(family, size, &p) else {
                    continue;
                };
                assert_eq!(m.validate(), Ok(()), "{family}({size})");
                assert_eq!(
                    m.num_states(),
                    expected_states(family, size),
                    "{family}({size})"
                );
                let text = store_model(&m);
                assert_eq!(
                    store_model(&generate_benchmark(family, size, &p).unwrap()),
                    text
                );
                assert_eq!(load_model(&text).unwrap(), m);
            }
        }
    }
}

#[test]
fn value_iteration_approaches_from_below() {
    let models = [
        ("L(5)", line(5, &int(1)).unwrap()),
        ("L(7,1/2)", line(7, &ratio(1, 2)).unwrap()),
        ("G(3)", grid(3).unwrap()),
        ("M(5)", maze(5).unwrap()),
    ];
    for (name, m) in models {
        let opt = mdp_min_expected_reward(&m);
        let chain = m.induced_dtmc(&opt.strategy.to_rand()).unwrap();
        let (_, solved) = dtmc_expected_reward(&chain);
        // exact iterates on the noisy line carry denominators near 2^steps
        let steps = if name == "L(7,1/2)" { 1_000 } else { 10_000 };
        let trace = value_iteration(&chain, steps);
        for s in 0..m.num_states() {
            let Value::Finite(v) = &solved[s] else {
                panic!("{name}: optimal strategy has infinite value")
            };
            for w in trace.windows(2) {
                assert!(w[0][s] <= w[1][s], "{name}: iterates decrease at {s}");
            }
            assert!(
                trace.iter().all(|x| &x[s] <= v),
                "{name}: iterate above the solved value"
            );
            assert!(
                v - &trace[steps][s] < ratio(1, 1000),
                "{name}: iterates stall below {v}"
            );
        }
    }
}

#[test]
fn single_action_optimum_is_the_chain_value() {
    for seed in 0..40 {
        let mut rng = common::rng(seed);
        let m = common::random_mdp(&mut rng, 6, 1, 1, 3);
        let chain = m.induced_dtmc(&DetStrategy(vec![0; 6]).to_rand()).unwrap();
        assert_eq!(
            mdp_min_expected_reward(&m).value,
            dtmc_expected_reward(&chain).0,
            "seed {seed}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_deterministic(family in family(), size in 2usize..12, p_num in 1i64..=4) {
        let p = ratio(p_num, 4);
        if let Ok(m) = generate_benchmark(family, size, &p) {
            prop_assert_eq!(store_model(&m), store_model(&generate_benchmark(family, size, &p).unwrap()));
            prop_assert_eq!(m.num_states(), expected_states(family, size));
            prop_assert_eq!(m.validate(), Ok(()));
        }
    }

    #[test]
    fn induced_rows_are_stochastic(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::random_mdp(&mut rng, 6, 1, 3, 3);
        let sigma = common::random_strategy(&mut rng, 6, 3);
        let d = m.induced_dtmc(&sigma).unwrap();
        for s in 0..6 {
            prop_assert!(row_sum(d.row(s)).is_one());
        }
        let det: Vec<usize> = (0..6).map(|s| (seed as usize + s) % 3).collect();
        let d = m.induced_dtmc(&DetStrategy(det.clone()).to_rand()).unwrap();
        for s in 0..6 {
            prop_assert_eq!(d.row(s), m.transition(s, det[s]));
        }
    }

    #[test]
    fn observation_can_only_cost(seed in any::<u64>(), budget in 1usize..4) {
        let mut rng = common::rng(seed);
        let m = common::random_mdp(&mut rng, 6, 1, 2, 2);
        let obs = common::random_observation(&mut rng, &m, budget);
        let sigma = common::random_strategy(&mut rng, budget, 2);
        let opt = mdp_min_expected_reward(&m).value;
        prop_assert!(opt <= evaluate_obs_strategy(&m, &obs, &sigma).unwrap());
    }

    #[test]
    fn policy_witness_reproduces_the_optimum(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m: Mdp = common::random_mdp(&mut rng, 7, 2, 3, 3);
        let opt = mdp_min_expected_reward(&m);
        let (value, per_state) = evaluate_det(&m, &opt.strategy.0);
        prop_assert_eq!(&value, &opt.value);
        for s in m.non_goal_states() {
            if opt.per_state[s].is_finite() {
                prop_assert_eq!(&per_state[s], &opt.per_state[s]);
            }
        }
        // no single deterministic switch improves a finite optimum
        for s in m.non_goal_states() {
            for a in 0..m.num_actions() {
                let mut sigma = opt.strategy.0.clone();
                sigma[s] = a;
                prop_assert!(evaluate_det(&m, &sigma).0 >= opt.value);
            }
        }
    }

    #[test]
    fn goal_edges_only_grow_almost_sure_reach(seed in any::<u64>(), state in 0usize..5) {
        let mut rng = common::rng(seed);
        let m = common::random_mdp(&mut rng, 6, 1, 1, 2);
        let d = m.induced_dtmc(&DetStrategy(vec![0; 6]).to_rand()).unwrap();
        let before = almost_sure_reach(&d);
        let mut rows: Vec<Vec<(usize, Rational)>> = (0..6).map(|s| d.row(s).clone()).collect();
        let half = ratio(1, 2);
        let mut row: Vec<(usize, Rational)> = rows[state].iter().map(|(t, p)| (*t, p * &half)).collect();
        match row.iter_mut().find(|(t, _)| *t == 5) {
            Some((_, p)) => *p += &half,
            None => row.push((5, half)),
        }
        row.sort_by_key(|(t, _)| *t);
        rows[state] = row;
        let grown = Dtmc::new(d.state_names().to_vec(), d.initial().to_vec(), d.goal().to_vec(), rows, d.rewards().to_vec());
        let after = almost_sure_reach(&grown);
        prop_assert!(before.iter().all(|s| after.contains(s)));
    }
}
