//! Exact expected reward: the fully observable optimum of a grid and the
//! value of a fixed observation-based strategy on a line.

use obsyn::analysis::{evaluate_obs_strategy, mdp_min_expected_reward};
use obsyn::generate::{grid, line};
use obsyn::model::{DetStrategy, ObservationFunction};
use obsyn::rational::int;

fn main() {
    let g = grid(3).unwrap();
    let opt = mdp_min_expected_reward(&g);
    println!("G(3) optimum {}", opt.value);
    for s in g.non_goal_states() {
        println!(
            "  {:<4} {:<6} {}",
            g.state_name(s),
            g.action_name(opt.strategy.0[s]),
            opt.per_state[s]
        );
    }

    // Two observations on L(5): left of the goal and right of it.
    let l = line(5, &int(1)).unwrap();
    let obs = ObservationFunction::from_pairs(
        &l,
        &[
            ("s0", "left"),
            ("s1", "left"),
            ("s3", "right"),
            ("s4", "right"),
        ],
    )
    .unwrap();
    let r = l.action_index("r").unwrap();
    let lft = l.action_index("l").unwrap();
    let sigma = DetStrategy(vec![r, lft]).to_rand();
    println!(
        "L(5) two-observation strategy {}",
        evaluate_obs_strategy(&l, &obs, &sigma).unwrap()
    );
}
