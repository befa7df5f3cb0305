//! The smallest observation budget that matches full observability.

use obsyn::enumerative::solve_mpbp;
use obsyn::generate::{generate_benchmark, model_id, Family};
use obsyn::rational::{int, ratio};

fn main() {
    for (family, size, p) in [
        (Family::Line, 9, int(1)),
        (Family::Line, 7, ratio(1, 2)),
        (Family::Grid, 4, int(1)),
    ] {
        let m = generate_benchmark(family, size, &p).unwrap();
        let r = solve_mpbp(&m).unwrap();
        let actions: Vec<&str> = r.actions.iter().map(|&a| m.action_name(a)).collect();
        println!(
            "{:<12} budget {} actions {:?} value {}",
            model_id(family, size, &p),
            r.budget,
            actions,
            r.value
        );
    }
}
