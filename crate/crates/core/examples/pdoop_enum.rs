//! Enumerative synthesis of an observation function and a deterministic
//! strategy: `pdoop_enum [FAMILY SIZE BUDGET TAU [strict]]`.

use obsyn::enumerative::{optimum_pdoop_enum, solve_pdoop_enum, EnumOptions, ProgressMode};
use obsyn::generate::{generate_benchmark, Family};
use obsyn::rational::{int, parse_rational, Threshold};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (family, size, budget, tau, strict) = match args.as_slice() {
        [f, k, b, t, rest @ ..] => (
            f.parse::<Family>().unwrap(),
            k.parse().unwrap(),
            b.parse().unwrap(),
            parse_rational(t).unwrap(),
            rest.first().is_some_and(|s| s == "strict"),
        ),
        _ => (Family::Grid, 3, 2, parse_rational("11/4").unwrap(), false),
    };
    let m = generate_benchmark(family, size, &int(1)).unwrap();
    let opts = EnumOptions {
        jobs: None,
        progress: ProgressMode::Text,
    };
    let r = solve_pdoop_enum(&m, budget, &Threshold { tau, strict }, opts).unwrap();
    print!("{}", r.to_json(&m));
    let best = optimum_pdoop_enum(&m, budget, opts).unwrap();
    println!(
        "best value with {budget} observations: {} ({} candidates)",
        best.best.map_or("none".into(), |b| b.2.to_string()),
        best.explored
    );
}
