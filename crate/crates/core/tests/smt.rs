//! SMT backend against enumeration on small random instances. Skipped when
//! no solver is configured.

mod common;

use obsyn::enumerative::{
    optimum_pdoop_enum, optimum_ssp_enum, solve_pdoop_enum, solve_ssp_enum, EnumOptions,
};
use obsyn::rational::{int, ratio, Threshold, Value};
use obsyn::smt::{default_solver_cmd, problem_script, solve_via_smt, SmtOptions};
use obsyn::solve::{Problem, Verdict};
use obsyn::tpmc::SensorMap;

fn solver() -> Option<String> {
    let cmd = default_solver_cmd();
    if cmd.is_none() {
        eprintln!("no SMT solver configured; skipping");
    }
    cmd
}

#[test]
fn deterministic_smt_agrees_with_enumeration() {
    let Some(cmd) = solver() else { return };
    let opts = SmtOptions {
        deterministic: true,
        ..SmtOptions::new(cmd)
    };
    for seed in 0..40 {
        let mut rng = common::rng(seed);
        let m = common::random_mdp(&mut rng, 5, 1, 2, 2);
        for budget in 1..=2 {
            let pdoop = optimum_pdoop_enum(&m, budget, EnumOptions::default()).unwrap();
            let ssp = optimum_ssp_enum(
                &m,
                &SensorMap::per_state(&m),
                budget,
                true,
                EnumOptions::default(),
            )
            .unwrap();
            for (problem, best) in [(Problem::Pdoop, pdoop.best), (Problem::Ssp, ssp.best)] {
                let taus = match best.map(|b| b.2) {
                    Some(Value::Finite(q)) => {
                        vec![Threshold::at_most(q.clone()), Threshold::below(q)]
                    }
                    _ => vec![Threshold::at_most(int(20))],
                };
                for t in taus {
                    let e = match problem {
                        Problem::Pdoop => solve_pdoop_enum(&m, budget, &t, EnumOptions::default()),
                        _ => solve_ssp_enum(&m, budget, &t, EnumOptions::default()),
                    }
                    .unwrap();
                    let s = solve_via_smt(problem, &m, budget, &t, None, &opts).unwrap();
                    assert_eq!(e.verdict, s.verdict, "seed {seed} {problem} B={budget} {t}");
                    if s.verdict == Verdict::Sat {
                        assert!(
                            s.verified && t.admits(s.value().unwrap()),
                            "seed {seed}: unverified sat"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn randomized_strategies_never_lose_to_deterministic_ones() {
    let Some(cmd) = solver() else { return };
    let opts = SmtOptions::new(cmd);
    for seed in 0..8 {
        let mut rng = common::rng(100 + seed);
        let m = common::random_mdp(&mut rng, 5, 1, 2, 2);
        let best = optimum_pdoop_enum(&m, 2, EnumOptions::default())
            .unwrap()
            .best
            .map(|b| b.2);
        let Some(Value::Finite(q)) = best else {
            continue;
        };
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(q.clone()),
            None,
            &opts,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Sat, "seed {seed}");
        assert!(r.verified, "seed {seed}");
    }
}

#[test]
fn scripts_are_byte_stable() {
    let m = obsyn::generate::grid(3).unwrap();
    let t = Threshold::below(ratio(9, 4));
    for problem in [Problem::Pop, Problem::Pdoop, Problem::Ssp] {
        let (_, a) = problem_script(problem, &m, 2, &t, None, &SmtOptions::new("")).unwrap();
        let (_, b) = problem_script(problem, &m, 2, &t, None, &SmtOptions::new("")).unwrap();
        assert_eq!(a.text, b.text);
    }
}
