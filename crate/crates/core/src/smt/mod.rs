//! Deciding synthesis problems with an external SMT solver.
//!
//! The matching tpMC is encoded as a nonlinear real arithmetic script, the
//! solver's model is read back exactly, decoded into an observation function
//! and strategy, and re-evaluated with the exact engine before a `sat` is
//! reported as verified.

mod encode;
mod parse;
mod process;

use std::time::Duration;

use num_traits::Zero;
use thiserror::Error;

pub use encode::{encode, literal, SmtScript, SmtVar};
pub use parse::{parse_assignment, Assignment};
pub use process::{
    default_solver_cmd, run_solver, SolverOutput, SolverStatus, SOLVER_ENV, Z3_TEMPLATE,
};

use crate::analysis::{evaluate_obs_strategy, mdp_min_expected_reward};
use crate::enumerative::solve_pdpep_enum;
use crate::model::{apply_observation, Mdp, ModelError, ObservationFunction};
use crate::rational::{fmt_rational, Rational, Threshold, Value};
use crate::solve::{Diagnostics, Problem, SolveResult, Verdict, Witness};
use crate::tpmc::{
    build_general_location_tpmc, build_location_tpmc, build_observation_tpmc, decode_witness,
    BuildOptions, Instantiation, SensorMap, Tpmc, TpmcError, VarRole,
};

/// Default per-call solver timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(900);

/// Strategy repair enumerates at most this many deterministic strategies.
const REPAIR_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("could not run the solver: {0}")]
    Launch(String),
    #[error("malformed solver output: {0}")]
    MalformedOutput(String),
    #[error("solver assigned an irrational value to {0}")]
    Irrational(String),
    #[error(
        "solver reported sat, but the decoded witness has exact value {exact} which violates {threshold}"
    )]
    VerificationMismatch { exact: Value, threshold: Threshold },
    #[error("{0}")]
    Tpmc(#[from] TpmcError),
    #[error("{0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct SmtOptions {
    /// Command template, with `{file}` standing for the script path.
    pub solver_cmd: String,
    pub timeout: Duration,
    /// Restrict strategies to deterministic ones (always on for PDOOP).
    pub deterministic: bool,
    /// Add the fully observable per-state optimum as redundant lower bounds
    /// on the value variables.
    pub value_bounds: bool,
    pub build: BuildOptions,
}

impl SmtOptions {
    pub fn new(solver_cmd: impl Into<String>) -> Self {
        SmtOptions {
            solver_cmd: solver_cmd.into(),
            timeout: DEFAULT_TIMEOUT,
            deterministic: false,
            value_bounds: true,
            build: BuildOptions::default(),
        }
    }
}

/// The tpMC a problem is decided on.
pub fn problem_tpmc(
    problem: Problem,
    m: &Mdp,
    budget: usize,
    loc: Option<&SensorMap>,
    build: BuildOptions,
) -> Result<Tpmc, SmtError> {
    if budget == 0 {
        return Err(SmtError::Precondition("budget must be at least 1".into()));
    }
    Ok(match problem {
        Problem::Pop | Problem::Pdoop => build_observation_tpmc(m, budget),
        Problem::Ssp => build_location_tpmc(m, budget, build),
        Problem::SspGeneral => {
            let loc = loc.ok_or_else(|| {
                SmtError::Precondition("general sensor selection needs a location map".into())
            })?;
            build_general_location_tpmc(m, loc, budget, build)?
        }
    })
}

/// Builds the script `solve_via_smt` would hand to the solver.
pub fn problem_script(
    problem: Problem,
    m: &Mdp,
    budget: usize,
    threshold: &Threshold,
    loc: Option<&SensorMap>,
    opts: &SmtOptions,
) -> Result<(Tpmc, SmtScript), SmtError> {
    let t = problem_tpmc(problem, m, budget, loc, opts.build)?;
    let deterministic = opts.deterministic || problem == Problem::Pdoop;
    let bounds = opts
        .value_bounds
        .then(|| mdp_min_expected_reward(m).per_state);
    let script = encode(&t, threshold, deterministic, bounds.as_deref())?;
    Ok((t, script))
}

/// Best deterministic strategy for `obs`, if it meets the threshold and the
/// strategy space is small enough to enumerate.
fn repair(
    m: &Mdp,
    obs: &ObservationFunction,
    threshold: &Threshold,
) -> Result<Option<Witness>, SmtError> {
    let size = (m.num_actions() as f64).powi(obs.num_labels() as i32);
    if size > REPAIR_LIMIT {
        return Ok(None);
    }
    let p = apply_observation(m, obs)?;
    let r = solve_pdpep_enum(&p, threshold).map_err(|e| SmtError::Precondition(e.to_string()))?;
    Ok(r.witness.filter(|_| r.verdict == Verdict::Sat))
}

/// Observation function read off the boolean parameters alone.
fn decode_observation(t: &Tpmc, params: &[Option<Rational>]) -> Option<ObservationFunction> {
    let values = t
        .vars
        .iter()
        .zip(params)
        .map(|(v, p)| match (v.role, p) {
            (VarRole::Choice { .. }, _) => Some(Rational::zero()),
            (_, p) => p.clone(),
        })
        .collect::<Option<Vec<_>>>()?;
    decode_witness(t, &Instantiation(values))
        .ok()
        .map(|(obs, _)| obs)
}

/// Decides `problem` on `m` with the external solver and verifies any
/// witness exactly.
pub fn solve_via_smt(
    problem: Problem,
    m: &Mdp,
    budget: usize,
    threshold: &Threshold,
    loc: Option<&SensorMap>,
    opts: &SmtOptions,
) -> Result<SolveResult, SmtError> {
    let (t, script) = problem_script(problem, m, budget, threshold, loc, opts)?;
    let out = run_solver(&script, &opts.solver_cmd, opts.timeout)?;
    let mut diagnostics = Diagnostics {
        seconds: out.seconds,
        exit_status: out.exit_status,
        ..Default::default()
    };
    let plain = |verdict, diagnostics| SolveResult {
        verdict,
        witness: None,
        verified: false,
        best: None,
        diagnostics,
    };
    match out.status {
        SolverStatus::Unsat => return Ok(plain(Verdict::Unsat, diagnostics)),
        SolverStatus::Unknown => {
            diagnostics.notes.push("solver answered unknown".into());
            return Ok(plain(Verdict::Unknown, diagnostics));
        }
        SolverStatus::Timeout => {
            diagnostics
                .notes
                .push(format!("timeout after {} s", opts.timeout.as_secs_f64()));
            return Ok(plain(Verdict::Unknown, diagnostics));
        }
        SolverStatus::Sat => {}
    }

    let model = parse::read_model(&out.model, &script)?;
    if let Some(name) = &model.irrational {
        diagnostics
            .notes
            .push(format!("solver model is irrational ({name})"));
        let repaired = match decode_observation(&t, &model.params) {
            Some(obs) => repair(m, &obs, threshold)?,
            None => None,
        };
        return Ok(match repaired {
            Some(w) => {
                diagnostics
                    .notes
                    .push("witness repaired with a deterministic strategy".into());
                SolveResult {
                    verdict: Verdict::Sat,
                    witness: Some(w),
                    verified: true,
                    best: None,
                    diagnostics,
                }
            }
            None => {
                diagnostics.notes.push("sat-unverifiable".into());
                plain(Verdict::Sat, diagnostics)
            }
        });
    }
    let inst = Instantiation(model.params.into_iter().flatten().collect());
    let values: Vec<Rational> = model.values.into_iter().flatten().collect();
    let claimed: Rational = t
        .initial
        .iter()
        .map(|&s| values[s].clone())
        .sum::<Rational>()
        / Rational::from_integer(t.initial.len().into());

    let (obs, strategy) = decode_witness(&t, &inst)?;
    let value = evaluate_obs_strategy(m, &obs, &strategy)?;
    if threshold.admits(&value) {
        if value != Value::Finite(claimed.clone()) {
            diagnostics.notes.push(format!(
                "solver's claimed value {} differs from the exact value",
                fmt_rational(&claimed)
            ));
        }
        let witness = Witness {
            obs,
            strategy,
            claimed: Some(claimed),
            value,
        };
        return Ok(SolveResult {
            verdict: Verdict::Sat,
            witness: Some(witness),
            verified: true,
            best: None,
            diagnostics,
        });
    }
    match repair(m, &obs, threshold)? {
        Some(w) => {
            diagnostics.notes.push(format!(
                "decoded strategy has value {value}; witness repaired with a deterministic strategy"
            ));
            Ok(SolveResult {
                verdict: Verdict::Sat,
                witness: Some(w),
                verified: true,
                best: None,
                diagnostics,
            })
        }
        None => Err(SmtError::VerificationMismatch {
            exact: value,
            threshold: threshold.clone(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::line;
    use crate::rational::{int, ratio};
    use std::os::unix::fs::PermissionsExt;

    /// A fake solver that prints `answer` whatever the script.
    fn fake_solver(dir: &tempfile::TempDir, answer: &str) -> String {
        let path = dir.path().join("solver.sh");
        std::fs::write(&path, format!("#!/bin/sh\ncat <<'EOF'\n{answer}\nEOF\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        format!("{} {{file}}", path.display())
    }

    fn line_model_answer(x_o1_r: &str, x_o2_r: &str) -> String {
        let x = |v: &str| if v == "1" { ("0", "1") } else { ("1", "0") };
        let (o1l, o1r) = x(x_o1_r);
        let (o2l, o2r) = x(x_o2_r);
        format!(
            "sat\n((y_s0_o1 1) (y_s0_o2 0) (y_s1_o1 1) (y_s1_o2 0) (y_s3_o1 0) (y_s3_o2 1) (y_s4_o1 0) (y_s4_o2 1)\n\
             (x_o1_l {o1l}) (x_o1_r {o1r}) (x_o2_l {o2l}) (x_o2_r {o2r})\n\
             (r_s0 2) (r_s1 1) (r_s2 0) (r_s3 1) (r_s4 2))"
        )
    }

    #[test]
    fn verified_sat_from_a_fake_solver() {
        let dir = tempfile::tempdir().unwrap();
        let m = line(5, &int(1)).unwrap();
        let opts = SmtOptions::new(fake_solver(&dir, &line_model_answer("1", "0")));
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(ratio(3, 2)),
            None,
            &opts,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Sat);
        assert!(r.verified);
        let w = r.witness.unwrap();
        assert_eq!(
            (w.value, w.claimed),
            (Value::Finite(ratio(3, 2)), Some(ratio(3, 2)))
        );
    }

    #[test]
    fn wrong_model_is_a_hard_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = line(5, &int(1)).unwrap();
        // o1 moves left: s0 never reaches the goal, and no deterministic repair meets 1
        let opts = SmtOptions::new(fake_solver(&dir, &line_model_answer("0", "0")));
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(int(1)),
            None,
            &opts,
        );
        assert!(matches!(r, Err(SmtError::VerificationMismatch { .. })));
    }

    #[test]
    fn statuses_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        let m = line(5, &int(1)).unwrap();
        let t = Threshold::at_most(int(1));
        let unsat = SmtOptions::new(fake_solver(
            &dir,
            "unsat\n(error \"model is not available\")",
        ));
        assert_eq!(
            solve_via_smt(Problem::Pop, &m, 2, &t, None, &unsat)
                .unwrap()
                .verdict,
            Verdict::Unsat
        );
        let garbage = SmtOptions::new(fake_solver(&dir, "segfault"));
        assert!(matches!(
            solve_via_smt(Problem::Pop, &m, 2, &t, None, &garbage),
            Err(SmtError::MalformedOutput(_))
        ));
        let missing = SmtOptions::new("/nonexistent/solver {file}");
        assert!(matches!(
            solve_via_smt(Problem::Pop, &m, 2, &t, None, &missing),
            Err(SmtError::Launch(_))
        ));
    }

    #[test]
    fn timeout_kills_the_solver() {
        let m = line(5, &int(1)).unwrap();
        let mut opts = SmtOptions::new("sleep 30");
        opts.timeout = Duration::from_millis(300);
        let start = std::time::Instant::now();
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(int(1)),
            None,
            &opts,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Unknown);
        assert!(r.diagnostics.notes[0].contains("timeout"));
        assert!(start.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn irrational_strategy_is_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let m = line(5, &int(1)).unwrap();
        let answer = line_model_answer("1", "0")
            .replace("(x_o1_l 0)", "(x_o1_l (root-obj (+ (^ x 2) (- 2)) 1))");
        let opts = SmtOptions::new(fake_solver(&dir, &answer));
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(ratio(3, 2)),
            None,
            &opts,
        )
        .unwrap();
        assert_eq!((r.verdict, r.verified), (Verdict::Sat, true));
        assert_eq!(r.value(), Some(&Value::Finite(ratio(3, 2))));
    }

    #[test]
    fn stdin_mode_without_placeholder() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("echo.sh");
        // answers unsat only if the script arrives on stdin
        std::fs::write(&path, "#!/bin/sh\ngrep -q check-sat && echo unsat\n").unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        let m = line(5, &int(1)).unwrap();
        let opts = SmtOptions::new(path.display().to_string());
        let r = solve_via_smt(
            Problem::Pop,
            &m,
            2,
            &Threshold::at_most(int(1)),
            None,
            &opts,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Unsat);
    }
}
