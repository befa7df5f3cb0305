//! Builds the observation tpMC of L(5), encodes a known witness as an
//! instantiation, checks the instantiated chain and decodes it back.

use obsyn::analysis::dtmc_expected_reward;
use obsyn::generate::line;
use obsyn::model::{DetStrategy, ObservationFunction};
use obsyn::rational::int;
use obsyn::tpmc::{build_observation_tpmc, decode_witness, encode_witness};

fn main() {
    let m = line(5, &int(1)).unwrap();
    let t = build_observation_tpmc(&m, 2);
    println!("{} variables, {} groups", t.vars.len(), t.groups.len());
    print!("{}", t.dump());

    let obs = ObservationFunction::from_pairs(
        &m,
        &[("s0", "o1"), ("s1", "o1"), ("s3", "o2"), ("s4", "o2")],
    )
    .unwrap();
    let sigma = DetStrategy(vec![
        m.action_index("r").unwrap(),
        m.action_index("l").unwrap(),
    ])
    .to_rand();
    let inst = encode_witness(&t, &obs, &sigma).unwrap();
    t.check_instantiation(&inst).unwrap();
    let (value, _) = dtmc_expected_reward(&t.instantiate(&inst).unwrap());
    println!("instantiated chain value {value}");
    let (back, strategy) = decode_witness(&t, &inst).unwrap();
    println!(
        "decoded labels {:?}, strategy {:?}",
        back.labels(),
        strategy.as_deterministic().map(|d| d.0)
    );
}
