//! Backend dispatch, optimum bracketing and the benchmark suite.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::mdp_min_expected_reward;
use crate::enumerative::{
    optimum_pdoop_enum, optimum_ssp_enum, solve_general_ssp_enum, solve_pdoop_enum, solve_ssp_enum,
    EnumError, EnumOptions,
};
use crate::generate::{generate_benchmark, model_id, Family};
use crate::model::Mdp;
use crate::rational::{fmt_rational, int, parse_rational, ratio, Rational, Threshold, Value};
use crate::smt::{solve_via_smt, SmtError, SmtOptions, DEFAULT_TIMEOUT};
use crate::solve::{Problem, SolveResult, Verdict, Witness};
use crate::tpmc::{BuildOptions, SensorMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Smt,
    Enum,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smt" => Ok(Backend::Smt),
            "enum" => Ok(Backend::Enum),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Smt => "smt",
            Backend::Enum => "enum",
        })
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no SMT solver configured; pass --solver-cmd or set OBSYN_SOLVER_CMD")]
    NoSolver,
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Everything a decision query needs besides the instance.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub solver_cmd: Option<String>,
    pub timeout: Duration,
    /// SMT backend: restrict POP and SSP to deterministic strategies.
    pub deterministic: bool,
    pub enumeration: EnumOptions,
    pub loc: Option<SensorMap>,
    pub build: BuildOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver_cmd: crate::smt::default_solver_cmd(),
            timeout: DEFAULT_TIMEOUT,
            deterministic: false,
            enumeration: EnumOptions::default(),
            loc: None,
            build: BuildOptions::default(),
        }
    }
}

impl SolverConfig {
    fn smt_options(&self) -> Result<SmtOptions, SolveError> {
        let cmd = self.solver_cmd.clone().ok_or(SolveError::NoSolver)?;
        Ok(SmtOptions {
            timeout: self.timeout,
            deterministic: self.deterministic,
            build: self.build,
            ..SmtOptions::new(cmd)
        })
    }

    fn sensors(&self, problem: Problem) -> Result<Option<&SensorMap>, SolveError> {
        match (problem, &self.loc) {
            (Problem::SspGeneral, None) => Err(SolveError::Usage(
                "general sensor selection needs a location map (--loc)".into(),
            )),
            (_, loc) => Ok(loc.as_ref()),
        }
    }
}

/// One decision query on either backend.
///
/// The enumerative backend only explores deterministic strategies, so for
/// POP it can prove `sat` but reports `unknown` instead of `unsat`.
pub fn solve_instance(
    problem: Problem,
    m: &Mdp,
    budget: usize,
    threshold: &Threshold,
    backend: Backend,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    let loc = cfg.sensors(problem)?;
    match backend {
        Backend::Smt => Ok(solve_via_smt(
            problem,
            m,
            budget,
            threshold,
            loc,
            &cfg.smt_options()?,
        )?),
        Backend::Enum => {
            let opts = cfg.enumeration;
            Ok(match problem {
                Problem::Pdoop => solve_pdoop_enum(m, budget, threshold, opts)?,
                Problem::Ssp => solve_ssp_enum(m, budget, threshold, opts)?,
                Problem::SspGeneral => {
                    solve_general_ssp_enum(m, loc.unwrap(), budget, threshold, opts, false)?
                }
                Problem::Pop => {
                    let mut r = solve_pdoop_enum(m, budget, threshold, opts)?;
                    if r.verdict == Verdict::Unsat {
                        r.verdict = Verdict::Unknown;
                        r.diagnostics.notes.push(
                            "no deterministic witness; randomized strategies are not enumerated"
                                .into(),
                        );
                    }
                    r
                }
            })
        }
    }
}

/// What bracketing found out about an optimum.
#[derive(Debug, Clone, PartialEq)]
pub enum Bracket {
    /// The optimum, attained by the witness.
    Exact {
        value: Value,
        witness: Option<Witness>,
    },
    /// The optimum lies in `(lo, hi]` (or `[lo, hi]` when `lo` is the fully
    /// observable optimum).
    Interval {
        lo: Rational,
        hi: Rational,
        witness: Option<Witness>,
    },
    /// No probed threshold was satisfiable.
    Infeasible { probes: Vec<Threshold> },
    /// A probe returned `unknown`; `hi` is the best satisfiable threshold so far.
    Unknown {
        lo: Option<Rational>,
        hi: Option<Rational>,
    },
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |q: &Option<Rational>| q.as_ref().map_or("?".to_string(), fmt_rational);
        match self {
            Bracket::Exact { value, .. } => write!(f, "optimum = {value}"),
            Bracket::Interval { lo, hi, .. } => {
                write!(f, "optimum in [{}, {}]", fmt_rational(lo), fmt_rational(hi))
            }
            Bracket::Infeasible { probes } if probes.is_empty() => {
                write!(f, "infeasible at all probed τ (the optimum is infinite)")
            }
            Bracket::Infeasible { probes } => {
                let list: Vec<String> = probes.iter().map(|t| t.to_string()).collect();
                write!(f, "infeasible at all probed τ ({})", list.join(", "))
            }
            Bracket::Unknown { lo, hi } => {
                write!(f, "unknown; optimum in [{}, {}]", opt(lo), opt(hi))
            }
        }
    }
}

/// Doubling steps tried when looking for a first satisfiable threshold.
const MAX_DOUBLINGS: usize = 12;

/// Recovers an optimum by decision queries. The enumerative backend answers
/// directly; the SMT backend bisects between the fully observable optimum
/// and a satisfiable threshold, tightening the upper end to each witness's
/// exact value and closing the interval as soon as `< hi` is unsat.
pub fn bracket_optimum(
    problem: Problem,
    m: &Mdp,
    budget: usize,
    backend: Backend,
    precision: &Rational,
    cfg: &SolverConfig,
) -> Result<Bracket, SolveError> {
    if backend == Backend::Enum && problem != Problem::Pop {
        let out = match problem {
            Problem::Pdoop => optimum_pdoop_enum(m, budget, cfg.enumeration)?,
            Problem::Ssp => {
                optimum_ssp_enum(m, &SensorMap::per_state(m), budget, true, cfg.enumeration)?
            }
            _ => optimum_ssp_enum(
                m,
                cfg.sensors(problem)?.unwrap(),
                budget,
                false,
                cfg.enumeration,
            )?,
        };
        return Ok(match out.best {
            Some((obs, sigma, value)) if value.is_finite() => {
                let witness = Witness {
                    obs,
                    strategy: sigma.to_rand(),
                    claimed: value.finite().cloned(),
                    value: value.clone(),
                };
                Bracket::Exact {
                    value,
                    witness: Some(witness),
                }
            }
            _ => Bracket::Infeasible { probes: Vec::new() },
        });
    }

    let query = |t: Threshold| solve_instance(problem, m, budget, &t, backend, cfg);
    let floor = mdp_min_expected_reward(m).value;
    let Value::Finite(floor) = floor else {
        return Ok(Bracket::Infeasible { probes: Vec::new() });
    };

    // find a satisfiable threshold, starting at the fully observable optimum
    let mut probes = Vec::new();
    let mut tau = floor.clone();
    let mut found: Option<(Rational, Witness)> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let t = Threshold::at_most(tau.clone());
        probes.push(t.clone());
        let r = query(t)?;
        match (r.verdict, r.witness) {
            (Verdict::Sat, Some(w)) => {
                let v = w.value.finite().cloned().unwrap_or_else(|| tau.clone());
                found = Some((v, w));
                break;
            }
            (Verdict::Sat, None) => {
                return Ok(Bracket::Unknown {
                    lo: Some(floor),
                    hi: Some(tau),
                });
            }
            (Verdict::Unsat, _) => {}
            (Verdict::Unknown, _) => {
                return Ok(Bracket::Unknown {
                    lo: Some(floor),
                    hi: None,
                })
            }
        }
        tau = if tau.is_zero() { int(1) } else { tau * int(2) };
    }
    let Some((mut hi, mut witness)) = found else {
        return Ok(Bracket::Infeasible { probes });
    };
    let mut lo = floor;
    loop {
        if hi == lo {
            return Ok(Bracket::Exact {
                value: Value::Finite(hi),
                witness: Some(witness),
            });
        }
        // is the current witness optimal?
        match query(Threshold::below(hi.clone()))?.verdict {
            Verdict::Unsat => {
                return Ok(Bracket::Exact {
                    value: Value::Finite(hi),
                    witness: Some(witness),
                })
            }
            Verdict::Unknown => {
                return Ok(Bracket::Unknown {
                    lo: Some(lo),
                    hi: Some(hi),
                })
            }
            Verdict::Sat => {}
        }
        if &hi - &lo <= *precision {
            return Ok(Bracket::Interval {
                lo,
                hi,
                witness: Some(witness),
            });
        }
        let mid = (&lo + &hi) / int(2);
        let r = query(Threshold::at_most(mid.clone()))?;
        match (r.verdict, r.witness) {
            (Verdict::Sat, Some(w)) => {
                hi = w.value.finite().cloned().unwrap_or(mid);
                witness = w;
            }
            (Verdict::Unsat, _) => lo = mid,
            _ => {
                return Ok(Bracket::Unknown {
                    lo: Some(lo),
                    hi: Some(hi),
                })
            }
        }
    }
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub problem: String,
    pub model: String,
    pub budget: usize,
    pub threshold: String,
    pub strict: bool,
    pub backend: String,
    pub verdict: String,
    pub value: String,
    pub seconds: f64,
    pub expected_verdict: String,
    pub expected_value: String,
    #[serde(rename = "match")]
    pub matches: bool,
    pub note: String,
}

/// What the published tables report for a row.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Sat, and the witness value equals this.
    SatWith(Rational),
    /// Sat with any value meeting the threshold.
    Sat,
    Unsat,
}

#[derive(Debug, Clone)]
pub enum RowKind {
    /// Fully observable optimum by policy iteration.
    MdpOptimum,
    Decide {
        problem: Problem,
        budget: usize,
        threshold: Threshold,
        backend: Backend,
        deterministic: bool,
    },
}

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub family: Family,
    pub size: usize,
    pub p: Rational,
    pub kind: RowKind,
    pub expected: Expectation,
}

fn q(s: &str) -> Rational {
    parse_rational(s).expect("suite constants parse")
}

/// The desk-scale rows of the published result tables.
pub fn paper_suite() -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    let mut opt = |family, size, p: Rational, v: &str| {
        rows.push(SuiteRow {
            family,
            size,
            p,
            kind: RowKind::MdpOptimum,
            expected: Expectation::SatWith(q(v)),
        })
    };
    use Family::*;
    for (k, v) in [(5, "3/2"), (9, "5/2"), (249, "125/2"), (377, "189/2")] {
        opt(Line, k, int(1), v);
    }
    for (k, v) in [
        (3, "9/4"),
        (6, "180/35"),
        (15, "3150/224"),
        (20, "7600/399"),
        (24, "13248/575"),
    ] {
        opt(Grid, k, int(1), v);
    }
    for (k, v) in [
        (5, "39/10"),
        (7, "84/15"),
        (9, "146/20"),
        (15, "434/35"),
        (39, "3116/95"),
    ] {
        opt(Maze, k, int(1), v);
    }

    let mut decide = |problem,
                      backend,
                      deterministic,
                      (family, size, p): (Family, usize, Rational),
                      budget,
                      t: &str| {
        let tau = q(t);
        for (threshold, expected) in [
            (
                Threshold::at_most(tau.clone()),
                Expectation::SatWith(tau.clone()),
            ),
            (Threshold::below(tau.clone()), Expectation::Unsat),
        ] {
            rows.push(SuiteRow {
                family,
                size,
                p: p.clone(),
                kind: RowKind::Decide {
                    problem,
                    budget,
                    threshold,
                    backend,
                    deterministic,
                },
                expected,
            });
        }
    };
    let line = |k, p: &str| (Line, k, q(p));
    // POP, randomized strategies
    for (m, b, t) in [
        (line(5, "1"), 2, "3/2"),
        (line(7, "1"), 2, "2"),
        (line(7, "1/2"), 2, "4"),
        (line(7, "2/3"), 2, "3"),
        (line(7, "3/4"), 2, "8/3"),
        (line(7, "99/100"), 2, "200/99"),
        ((Grid, 3, int(1)), 2, "9/4"),
        ((Maze, 5, int(1)), 4, "39/10"),
    ] {
        decide(Problem::Pop, Backend::Smt, false, m, b, t);
    }
    // PDOOP and SSP, deterministic strategies, on both backends
    for backend in [Backend::Enum, Backend::Smt] {
        for (m, b, t) in [
            (line(5, "1"), 2, "3/2"),
            (line(9, "1"), 2, "5/2"),
            ((Maze, 5, int(1)), 4, "39/10"),
            ((Grid, 3, int(1)), 2, "9/4"),
        ] {
            decide(Problem::Pdoop, backend, true, m, b, t);
        }
        for (m, b, t) in [
            (line(5, "1"), 2, "3/2"),
            (line(7, "1"), 3, "2"),
            ((Grid, 3, int(1)), 2, "9/4"),
        ] {
            decide(Problem::Ssp, backend, true, m, b, t);
        }
    }

    let mut extra = |family, size, p: Rational, problem, budget, threshold, backend, expected| {
        rows.push(SuiteRow {
            family,
            size,
            p,
            kind: RowKind::Decide {
                problem,
                budget,
                threshold,
                backend,
                deterministic: problem != Problem::Pop,
            },
            expected,
        })
    };
    // loose thresholds
    extra(
        Line,
        7,
        int(1),
        Problem::Pop,
        2,
        Threshold::at_most(int(4)),
        Backend::Smt,
        Expectation::Sat,
    );
    extra(
        Line,
        9,
        int(1),
        Problem::Pdoop,
        2,
        Threshold::at_most(int(5)),
        Backend::Enum,
        Expectation::Sat,
    );
    extra(
        Line,
        7,
        int(1),
        Problem::Ssp,
        3,
        Threshold::at_most(int(4)),
        Backend::Enum,
        Expectation::Sat,
    );
    // the sink variant never reaches the goal almost surely
    for t in [
        Threshold::at_most(int(8)),
        Threshold::at_most(int(4)),
        Threshold::below(int(4)),
    ] {
        extra(
            LineSink,
            7,
            ratio(1, 2),
            Problem::Pop,
            2,
            t,
            Backend::Smt,
            Expectation::Unsat,
        );
    }
    rows
}

fn expectation_text(e: &Expectation) -> (String, String) {
    match e {
        Expectation::SatWith(v) => ("sat".into(), fmt_rational(v)),
        Expectation::Sat => ("sat".into(), String::new()),
        Expectation::Unsat => ("unsat".into(), String::new()),
    }
}

/// Runs one suite row. SMT rows without a configured solver are recorded as
/// `not-run`.
pub fn run_row(row: &SuiteRow, cfg: &SolverConfig) -> RunRecord {
    let m = generate_benchmark(row.family, row.size, &row.p).expect("suite models are valid");
    let (expected_verdict, expected_value) = expectation_text(&row.expected);
    let mut rec = RunRecord {
        problem: String::new(),
        model: model_id(row.family, row.size, &row.p),
        budget: 0,
        threshold: String::new(),
        strict: false,
        backend: String::new(),
        verdict: String::new(),
        value: String::new(),
        seconds: 0.0,
        expected_verdict,
        expected_value,
        matches: false,
        note: String::new(),
    };
    let start = Instant::now();
    match &row.kind {
        RowKind::MdpOptimum => {
            rec.problem = "mdp-opt".into();
            rec.backend = "policy-iteration".into();
            let v = mdp_min_expected_reward(&m).value;
            rec.seconds = start.elapsed().as_secs_f64();
            rec.verdict = if v.is_finite() { "sat" } else { "unsat" }.into();
            rec.value = v.finite().map(fmt_rational).unwrap_or_default();
            rec.matches =
                matches!(&row.expected, Expectation::SatWith(e) if v == Value::Finite(e.clone()));
        }
        RowKind::Decide {
            problem,
            budget,
            threshold,
            backend,
            deterministic,
        } => {
            rec.problem = problem.to_string();
            rec.budget = *budget;
            rec.threshold = threshold.to_string();
            rec.strict = threshold.strict;
            rec.backend = backend.to_string();
            let cfg = SolverConfig {
                deterministic: *deterministic,
                ..cfg.clone()
            };
            match solve_instance(*problem, &m, *budget, threshold, *backend, &cfg) {
                Err(SolveError::NoSolver) => {
                    rec.verdict = "not-run".into();
                    rec.note = "no SMT solver configured".into();
                }
                Err(e) => {
                    rec.verdict = "error".into();
                    rec.note = e.to_string();
                }
                Ok(r) => {
                    rec.verdict = r.verdict.to_string();
                    let value = r.value().filter(|_| r.verified).cloned();
                    rec.value = value.as_ref().map(|v| v.to_string()).unwrap_or_default();
                    rec.note = r.diagnostics.notes.join("; ");
                    rec.matches = match (&row.expected, r.verdict, &value) {
                        (Expectation::SatWith(e), Verdict::Sat, Some(v)) => {
                            v == &Value::Finite(e.clone())
                        }
                        (Expectation::Sat, Verdict::Sat, Some(v)) => threshold.admits(v),
                        (Expectation::Unsat, Verdict::Unsat, _) => true,
                        _ => false,
                    };
                }
            }
            rec.seconds = start.elapsed().as_secs_f64();
        }
    }
    rec
}

/// Runs the whole suite, `jobs` rows at a time, in suite order.
pub fn reproduce_tables(cfg: &SolverConfig, jobs: usize) -> Vec<RunRecord> {
    let rows = paper_suite();
    let run = || rows.par_iter().map(|r| run_row(r, cfg)).collect();
    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => rows.iter().map(|r| run_row(r, cfg)).collect(),
    }
}

/// CSV with a header row.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("records serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}
