//! Brackets the optimum of a synthesis problem with repeated decision
//! queries (SMT when a solver is available, enumeration otherwise).

use obsyn::experiments::{bracket_optimum, Backend, SolverConfig};
use obsyn::generate::line;
use obsyn::rational::{int, ratio};
use obsyn::solve::Problem;

fn main() {
    let cfg = SolverConfig::default();
    let backend = if cfg.solver_cmd.is_some() {
        Backend::Smt
    } else {
        Backend::Enum
    };
    let m = line(5, &int(1)).unwrap();
    for problem in [Problem::Pop, Problem::Pdoop, Problem::Ssp] {
        let b = bracket_optimum(problem, &m, 2, backend, &ratio(1, 100), &cfg).unwrap();
        println!("{problem} on L(5), budget 2, {backend}: {b}");
    }
    let noisy = line(7, &ratio(1, 2)).unwrap();
    let b = bracket_optimum(Problem::Ssp, &noisy, 3, Backend::Enum, &ratio(1, 100), &cfg).unwrap();
    println!("ssp on L(7,1/2), budget 3, enum: {b}");
    let b = bracket_optimum(Problem::Pdoop, &m, 1, Backend::Enum, &ratio(1, 100), &cfg).unwrap();
    println!("pdoop on L(5), budget 1, enum: {b}");
}
