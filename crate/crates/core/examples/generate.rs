//! Generates the benchmark families and prints their sizes and fully
//! observable optima. Pass `--dump FAMILY SIZE` to print one model as JSON.

use obsyn::analysis::mdp_min_expected_reward;
use obsyn::format::store_model;
use obsyn::generate::{generate_benchmark, model_id, Family};
use obsyn::rational::{int, ratio};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [flag, family, size] = args.as_slice() {
        if flag == "--dump" {
            let m = generate_benchmark(family.parse().unwrap(), size.parse().unwrap(), &int(1))
                .unwrap();
            print!("{}", store_model(&m));
            return;
        }
    }
    let cases = [
        (Family::Line, 7, int(1)),
        (Family::Line, 7, ratio(1, 2)),
        (Family::LineSink, 7, ratio(1, 2)),
        (Family::Grid, 3, int(1)),
        (Family::Maze, 5, int(1)),
    ];
    for (family, size, p) in cases {
        let m = generate_benchmark(family, size, &p).unwrap();
        let opt = mdp_min_expected_reward(&m);
        println!(
            "{:<16} {:>3} states {:>2} actions  optimum {}",
            model_id(family, size, &p),
            m.num_states(),
            m.num_actions(),
            opt.value
        );
    }
}
