//! Decides positional observability on a few benchmarks with an external
//! SMT solver (z3 by default, or `OBSYN_SOLVER_CMD`).

use obsyn::generate::{generate_benchmark, Family};
use obsyn::rational::{parse_rational, Threshold};
use obsyn::smt::{default_solver_cmd, solve_via_smt, SmtOptions};
use obsyn::solve::Problem;

fn main() {
    let Some(cmd) = default_solver_cmd() else {
        eprintln!("no SMT solver configured; set OBSYN_SOLVER_CMD or put z3 on the path");
        return;
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (family, size, p, budget, tau, strict) = match args.as_slice() {
        [f, k, p, b, t, rest @ ..] => (
            f.parse::<Family>().unwrap(),
            k.parse().unwrap(),
            parse_rational(p).unwrap(),
            b.parse().unwrap(),
            parse_rational(t).unwrap(),
            rest.first().is_some_and(|s| s == "strict"),
        ),
        _ => (
            Family::Line,
            7,
            parse_rational("1").unwrap(),
            2,
            parse_rational("2").unwrap(),
            false,
        ),
    };
    let m = generate_benchmark(family, size, &p).unwrap();
    let threshold = Threshold { tau, strict };
    let r = solve_via_smt(
        Problem::Pop,
        &m,
        budget,
        &threshold,
        None,
        &SmtOptions::new(cmd),
    )
    .unwrap();
    println!("verdict {} ({:.2} s)", r.verdict, r.diagnostics.seconds);
    print!("{}", r.to_json(&m));
}
