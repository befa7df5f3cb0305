//! Prints the SMT-LIB2 script for a synthesis query without solving it:
//! `emit_smt PROBLEM FAMILY SIZE P BUDGET TAU [strict]`.

use obsyn::generate::{generate_benchmark, Family};
use obsyn::rational::{parse_rational, Threshold};
use obsyn::smt::{problem_script, SmtOptions};
use obsyn::solve::Problem;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [problem, family, size, p, budget, tau, rest @ ..] = args.as_slice() else {
        eprintln!("usage: emit_smt PROBLEM FAMILY SIZE P BUDGET TAU [strict]");
        std::process::exit(3);
    };
    let problem: Problem = problem.parse().unwrap();
    let m = generate_benchmark(
        family.parse::<Family>().unwrap(),
        size.parse().unwrap(),
        &parse_rational(p).unwrap(),
    )
    .unwrap();
    let threshold = Threshold {
        tau: parse_rational(tau).unwrap(),
        strict: rest.first().is_some_and(|s| s == "strict"),
    };
    let (_, script) = problem_script(
        problem,
        &m,
        budget.parse().unwrap(),
        &threshold,
        None,
        &SmtOptions::new(""),
    )
    .unwrap();
    print!("{}", script.text);
}
