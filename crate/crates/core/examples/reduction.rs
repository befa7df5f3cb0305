//! Positional POMDP policy existence through observation synthesis: the
//! reduction adds a tagged copy per observation, and the reduced model has
//! a two-observation solution exactly when the POMDP has a good policy.

use obsyn::enumerative::{solve_pdoop_enum, solve_pdpep_enum, EnumOptions};
use obsyn::generate::line;
use obsyn::model::{apply_observation, ObservationFunction};
use obsyn::rational::{int, ratio, Threshold};
use obsyn::tpmc::{build_policy_reduction, ReductionVariant};

fn main() {
    let m = line(5, &int(1)).unwrap();
    let obs =
        ObservationFunction::from_pairs(&m, &[("s0", "a"), ("s1", "a"), ("s3", "b"), ("s4", "b")])
            .unwrap();
    let p = apply_observation(&m, &obs).unwrap();
    for tau in [ratio(3, 2), int(1)] {
        let direct = solve_pdpep_enum(&p, &Threshold::at_most(tau.clone())).unwrap();
        let reduced = build_policy_reduction(&p, &tau, ReductionVariant::Positional).unwrap();
        let via = solve_pdoop_enum(
            &reduced,
            obs.num_labels(),
            &Threshold::at_most(tau.clone()),
            EnumOptions::default(),
        )
        .unwrap();
        println!(
            "tau {tau}: policy search {}, reduction {} ({} states)",
            direct.verdict,
            via.verdict,
            reduced.num_states()
        );
    }
}
