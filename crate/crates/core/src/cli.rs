//! The `obsyn` command line.
//!
//! Exit codes: 0 sat, 1 unsat, 2 unknown or timeout, 3 usage or I/O error,
//! 4 verification mismatch.

use std::ffi::OsString;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value as Json;

use crate::analysis::{evaluate_obs_strategy, mdp_min_expected_reward};
use crate::enumerative::{solve_mpbp, EnumOptions, ProgressMode};
use crate::experiments::{
    bracket_optimum, records_to_csv, reproduce_tables, solve_instance, Backend, Bracket,
    SolveError, SolverConfig,
};
use crate::format::{load_model, store_model};
use crate::generate::{generate_benchmark, Family};
use crate::model::Mdp;
use crate::rational::{int, parse_rational, Rational, Threshold, Value};
use crate::smt::{default_solver_cmd, problem_script, SmtError, SmtOptions};
use crate::solve::{load_witness, Diagnostics, Problem, SolveResult, Verdict, Witness};
use crate::tpmc::{BuildOptions, SensorMap};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "obsyn",
    version,
    about = "Observation function and strategy synthesis for MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark model.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        size: usize,
        /// Success probability of a move.
        #[arg(long, default_value = "1", value_parser = rational)]
        p: Rational,
        /// Output file (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide a synthesis problem.
    Solve(SolveArgs),
    /// Smallest number of observations achieving the fully observable optimum.
    MinBudget {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fully observable optimum with an optimal strategy.
    MdpOpt {
        #[arg(long)]
        model: PathBuf,
    },
    /// Re-evaluate a witness file exactly.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
    /// Run the benchmark suite and write a CSV.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Bracket an optimum by repeated decision queries.
    Bracket {
        #[arg(long)]
        problem: Problem,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long, default_value = "1/100", value_parser = rational)]
        precision: Rational,
        #[arg(long)]
        loc: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Paper,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum Progress {
    #[default]
    Off,
    Text,
    Ndjson,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Solver command template; `{file}` is replaced by the script path.
    #[arg(long, env = "OBSYN_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Per-call solver timeout in seconds.
    #[arg(long, default_value_t = 900)]
    timeout: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    budget: usize,
    #[arg(long, value_parser = rational)]
    threshold: Rational,
    #[arg(long)]
    strict: bool,
    /// Defaults to `smt` when a solver is configured, `enum` otherwise.
    #[arg(long)]
    backend: Option<Backend>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the SMT-LIB2 script here and exit without solving.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    /// Write the result file here (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// SMT backend: only deterministic strategies (implied for pdoop).
    #[arg(long)]
    deterministic: bool,
    /// Sensor sets per state for ssp-general: JSON object state -> [sensor].
    #[arg(long)]
    loc: Option<PathBuf>,
    /// Require exactly `budget` sensors instead of at most.
    #[arg(long)]
    exact_budget: bool,
    /// Leave out the redundant value lower bounds in the SMT encoding.
    #[arg(long)]
    no_value_bounds: bool,
    #[arg(long, value_enum, default_value_t = Progress::Off)]
    progress: Progress,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// An error with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::Smt(SmtError::VerificationMismatch { .. }) => EXIT_MISMATCH,
            SolveError::Smt(SmtError::Irrational(_) | SmtError::MalformedOutput(_)) => EXIT_UNKNOWN,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::usage(format!("standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<Mdp, Failure> {
    load_model(&read_text(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_sensors(m: &Mdp, path: &Path) -> Result<SensorMap, Failure> {
    let bad = |msg: String| Failure::usage(format!("{}: {msg}", path.display()));
    let json: Json = serde_json::from_str(&read_text(path)?).map_err(|e| bad(e.to_string()))?;
    let obj = json
        .as_object()
        .ok_or_else(|| bad("expected an object mapping states to sensor lists".into()))?;
    let mut pairs: Vec<(&str, Vec<&str>)> = Vec::new();
    for (state, sensors) in obj {
        let list = sensors
            .as_array()
            .ok_or_else(|| bad(format!("sensors of {state} must be a list")))?
            .iter()
            .map(|d| {
                d.as_str()
                    .ok_or_else(|| bad(format!("sensor names of {state} must be strings")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        pairs.push((state, list));
    }
    SensorMap::from_pairs(m, &pairs).map_err(|e| bad(e.to_string()))
}

fn solver_config(args: &SolverArgs, jobs: Option<usize>, progress: Progress) -> SolverConfig {
    let progress = match progress {
        Progress::Off => ProgressMode::Off,
        Progress::Text => ProgressMode::Text,
        Progress::Ndjson => ProgressMode::Ndjson,
    };
    SolverConfig {
        solver_cmd: args
            .solver_cmd
            .clone()
            .filter(|c| !c.trim().is_empty())
            .or_else(default_solver_cmd),
        timeout: Duration::from_secs(args.timeout),
        enumeration: EnumOptions { jobs, progress },
        ..Default::default()
    }
}

fn default_backend(cfg: &SolverConfig) -> Backend {
    if cfg.solver_cmd.is_some() {
        Backend::Smt
    } else {
        Backend::Enum
    }
}

fn verdict_code(r: &SolveResult) -> i32 {
    match r.verdict {
        Verdict::Sat if r.verified => EXIT_SAT,
        Verdict::Sat => EXIT_UNKNOWN,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

fn emit_result(m: &Mdp, r: &SolveResult, out: Option<&Path>) -> Result<(), Failure> {
    let json = r.to_json(m);
    match out {
        Some(path) => {
            write_text(path, &json)?;
            let value = r.value().map_or(String::new(), |v| format!(", value {v}"));
            println!("{}{value}", r.verdict);
        }
        None => print!("{json}"),
    }
    for note in &r.diagnostics.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<i32, Failure> {
    let m = read_model(&args.model)?;
    let threshold = Threshold {
        tau: args.threshold.clone(),
        strict: args.strict,
    };
    let mut cfg = solver_config(&args.solver, args.jobs, args.progress);
    cfg.deterministic = args.deterministic;
    cfg.build = BuildOptions {
        exact_budget: args.exact_budget,
        ..BuildOptions::default()
    };
    if let Some(path) = &args.loc {
        cfg.loc = Some(read_sensors(&m, path)?);
    }
    if let Some(path) = &args.emit_smt {
        let opts = SmtOptions {
            deterministic: args.deterministic,
            value_bounds: !args.no_value_bounds,
            build: cfg.build,
            ..SmtOptions::new("")
        };
        let (_, script) = problem_script(
            args.problem,
            &m,
            args.budget,
            &threshold,
            cfg.loc.as_ref(),
            &opts,
        )
        .map_err(Failure::usage)?;
        write_text(path, &script.text)?;
        return Ok(EXIT_SAT);
    }
    let backend = args.backend.unwrap_or_else(|| default_backend(&cfg));
    let r = if backend == Backend::Smt && args.no_value_bounds {
        let cmd = cfg.solver_cmd.clone().ok_or(SolveError::NoSolver)?;
        let opts = SmtOptions {
            timeout: cfg.timeout,
            deterministic: cfg.deterministic,
            value_bounds: false,
            build: cfg.build,
            ..SmtOptions::new(cmd)
        };
        crate::smt::solve_via_smt(
            args.problem,
            &m,
            args.budget,
            &threshold,
            cfg.loc.as_ref(),
            &opts,
        )
        .map_err(SolveError::from)?
    } else {
        solve_instance(args.problem, &m, args.budget, &threshold, backend, &cfg)?
    };
    emit_result(&m, &r, args.out.as_deref())?;
    Ok(verdict_code(&r))
}

fn min_budget(model: &Path, out: Option<&Path>) -> Result<i32, Failure> {
    let m = read_model(model)?;
    let r = solve_mpbp(&m).map_err(Failure::usage)?;
    let names: Vec<&str> = r.actions.iter().map(|&a| m.action_name(a)).collect();
    println!("budget {}", r.budget);
    println!("actions {}", names.join(" "));
    println!("value {}", r.value);
    if let Some(path) = out {
        let result = SolveResult {
            verdict: Verdict::Sat,
            witness: Some(Witness {
                obs: r.obs,
                strategy: r.strategy.to_rand(),
                claimed: r.value.finite().cloned(),
                value: r.value,
            }),
            verified: true,
            best: None,
            diagnostics: Diagnostics::default(),
        };
        write_text(path, &result.to_json(&m))?;
    }
    Ok(EXIT_SAT)
}

fn mdp_opt(model: &Path) -> Result<i32, Failure> {
    let m = read_model(model)?;
    let opt = mdp_min_expected_reward(&m);
    println!("value {}", opt.value);
    for s in m.non_goal_states() {
        println!(
            "{} {} {}",
            m.state_name(s),
            m.action_name(opt.strategy.0[s]),
            opt.per_state[s]
        );
    }
    Ok(if opt.value.is_finite() {
        EXIT_SAT
    } else {
        EXIT_UNSAT
    })
}

fn verify(model: &Path, witness: &Path) -> Result<i32, Failure> {
    let m = read_model(model)?;
    let w = load_witness(&m, &read_text(witness)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", witness.display())))?;
    let value = evaluate_obs_strategy(&m, &w.obs, &w.strategy).map_err(Failure::usage)?;
    println!("value {value}");
    match w.value {
        Some(recorded) if recorded != value => {
            eprintln!("recorded value {recorded} differs from the exact value {value}");
            Ok(EXIT_MISMATCH)
        }
        _ => Ok(EXIT_SAT),
    }
}

fn bench(out: &Path, jobs: usize, solver: &SolverArgs) -> Result<i32, Failure> {
    let cfg = solver_config(solver, None, Progress::Off);
    if cfg.solver_cmd.is_none() {
        eprintln!("note: no SMT solver configured; SMT rows are recorded as not-run");
    }
    let records = reproduce_tables(&cfg, jobs);
    write_text(out, &records_to_csv(&records))?;
    let mismatches = records
        .iter()
        .filter(|r| !r.matches && r.verdict != "not-run")
        .count();
    println!("{} rows, {} mismatches", records.len(), mismatches);
    Ok(if mismatches == 0 {
        EXIT_SAT
    } else {
        EXIT_MISMATCH
    })
}

#[allow(clippy::too_many_arguments)]
fn bracket(
    problem: Problem,
    model: &Path,
    budget: usize,
    backend: Option<Backend>,
    precision: &Rational,
    loc: Option<&Path>,
    jobs: Option<usize>,
    solver: &SolverArgs,
) -> Result<i32, Failure> {
    let m = read_model(model)?;
    let mut cfg = solver_config(solver, jobs, Progress::Off);
    if let Some(path) = loc {
        cfg.loc = Some(read_sensors(&m, path)?);
    }
    let backend = backend.unwrap_or_else(|| default_backend(&cfg));
    if precision <= &int(0) {
        return Err(Failure::usage("precision must be positive"));
    }
    let b = bracket_optimum(problem, &m, budget, backend, precision, &cfg)?;
    println!("{b}");
    Ok(match b {
        Bracket::Exact {
            value: Value::Finite(_),
            ..
        }
        | Bracket::Interval { .. } => EXIT_SAT,
        Bracket::Exact { .. } | Bracket::Infeasible { .. } => EXIT_UNSAT,
        Bracket::Unknown { .. } => EXIT_UNKNOWN,
    })
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_SAT };
        }
    };
    let result = match cli.command {
        Command::Gen {
            family,
            size,
            p,
            out,
        } => generate_benchmark(family, size, &p)
            .map_err(Failure::usage)
            .and_then(|m| {
                let text = store_model(&m);
                match out {
                    Some(path) => write_text(&path, &text),
                    None => {
                        print!("{text}");
                        Ok(())
                    }
                }
            })
            .map(|_| EXIT_SAT),
        Command::Solve(args) => solve(args),
        Command::MinBudget { model, out } => min_budget(&model, out.as_deref()),
        Command::MdpOpt { model } => mdp_opt(&model),
        Command::Verify { model, witness } => verify(&model, &witness),
        Command::Bench {
            suite: Suite::Paper,
            out,
            jobs,
            solver,
        } => bench(&out, jobs, &solver),
        Command::Bracket {
            problem,
            model,
            budget,
            backend,
            precision,
            loc,
            jobs,
            solver,
        } => bracket(
            problem,
            &model,
            budget,
            backend,
            &precision,
            loc.as_deref(),
            jobs,
            &solver,
        ),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
