//! The `obsyn` binary: exit codes, witness files and CSV output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use obsyn::experiments::{paper_suite, records_to_csv, run_row, Backend, RowKind, SolverConfig};
use obsyn::smt::default_solver_cmd;

fn obsyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obsyn"))
        .args(args)
        .env_remove("OBSYN_SOLVER_CMD")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, family: &str, size: &str, p: &str) -> PathBuf {
    let path = dir.join(format!("{family}{size}.json"));
    let out = obsyn(&[
        "gen",
        "--family",
        family,
        "--size",
        size,
        "--p",
        p,
        "--out",
        path_str(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn usage_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = generate(dir.path(), "line", "5", "1");
    let m = path_str(&model);
    let base = [
        "solve",
        "--problem",
        "pdoop",
        "--model",
        m,
        "--budget",
        "2",
        "--backend",
        "enum",
    ];
    assert_eq!(
        code(&obsyn(&[&base[..], &["--threshold", "1.5x"]].concat())),
        3
    );
    assert_eq!(
        code(&obsyn(&[&base[..], &["--threshold", "1.5"]].concat())),
        3
    );
    assert_eq!(
        code(&obsyn(&[
            "solve",
            "--problem",
            "pdoop",
            "--model",
            "/nonexistent.json",
            "--budget",
            "2",
            "--threshold",
            "1"
        ])),
        3
    );
    assert_eq!(code(&obsyn(&["frobnicate"])), 3);
    assert_eq!(code(&obsyn(&["gen", "--family", "line", "--size", "4"])), 3);
    assert_eq!(code(&obsyn(&["--help"])), 0);
    assert_eq!(code(&obsyn(&["--version"])), 0);
}

#[test]
fn exit_code_is_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let model = generate(dir.path(), "line", "5", "1");
    let m = path_str(&model);
    let solve = |extra: &[&str]| {
        let mut args = vec![
            "solve",
            "--problem",
            "pdoop",
            "--model",
            m,
            "--budget",
            "2",
            "--backend",
            "enum",
        ];
        args.extend_from_slice(extra);
        code(&obsyn(&args))
    };
    assert_eq!(solve(&["--threshold", "3/2"]), 0);
    assert_eq!(solve(&["--threshold", "3/2", "--strict"]), 1);
    assert_eq!(
        code(&obsyn(&[
            "solve",
            "--problem",
            "ssp",
            "--model",
            m,
            "--budget",
            "2",
            "--threshold",
            "3/2",
            "--backend",
            "enum"
        ])),
        0
    );
    // a solver that only ever says unknown
    let unknown = obsyn(&[
        "solve",
        "--problem",
        "pop",
        "--model",
        m,
        "--budget",
        "2",
        "--threshold",
        "2",
        "--backend",
        "smt",
        "--solver-cmd",
        "echo unknown",
    ]);
    assert_eq!(
        code(&unknown),
        2,
        "{}",
        String::from_utf8_lossy(&unknown.stderr)
    );
}

#[test]
fn grid_pop_via_smt() {
    if default_solver_cmd().is_none() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let model = generate(dir.path(), "grid", "3", "1");
    let z3 = default_solver_cmd().unwrap();
    let out = obsyn(&[
        "solve",
        "--problem",
        "pop",
        "--model",
        path_str(&model),
        "--budget",
        "2",
        "--threshold",
        "9/4",
        "--backend",
        "smt",
        "--solver-cmd",
        &z3,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["value"], "9/4");
    assert_eq!(json["verified"], true);
}

#[test]
fn verify_reproduces_every_emitted_witness() {
    let dir = tempfile::tempdir().unwrap();
    let mut cases = vec![
        (
            generate(dir.path(), "line", "7", "1/2"),
            "pdoop",
            "2",
            "4",
            "enum",
        ),
        (
            generate(dir.path(), "grid", "3", "1"),
            "ssp",
            "2",
            "9/4",
            "enum",
        ),
        (
            generate(dir.path(), "maze", "5", "1"),
            "pdoop",
            "4",
            "39/10",
            "enum",
        ),
    ];
    if default_solver_cmd().is_some() {
        cases.push((
            generate(dir.path(), "line", "5", "1"),
            "pop",
            "2",
            "3/2",
            "smt",
        ));
    }
    for (i, (model, problem, budget, tau, backend)) in cases.iter().enumerate() {
        let witness = dir.path().join(format!("w{i}.json"));
        let m = path_str(model);
        let z3 = default_solver_cmd().unwrap_or_default();
        let out = obsyn(&[
            "solve",
            "--problem",
            problem,
            "--model",
            m,
            "--budget",
            budget,
            "--threshold",
            tau,
            "--backend",
            backend,
            "--solver-cmd",
            &z3,
            "--out",
            path_str(&witness),
        ]);
        assert_eq!(
            code(&out),
            0,
            "{problem}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let checked = obsyn(&["verify", "--model", m, "--witness", path_str(&witness)]);
        assert_eq!(code(&checked), 0);
        assert_eq!(
            String::from_utf8_lossy(&checked.stdout).trim(),
            format!("value {tau}")
        );

        // a tampered value is a verification mismatch
        let text = std::fs::read_to_string(&witness).unwrap();
        let tampered = text.replace(&format!("\"value\": \"{tau}\""), "\"value\": \"1/1000\"");
        assert_ne!(text, tampered);
        std::fs::write(&witness, tampered).unwrap();
        assert_eq!(
            code(&obsyn(&[
                "verify",
                "--model",
                m,
                "--witness",
                path_str(&witness)
            ])),
            4
        );
    }
}

#[test]
fn emit_smt_writes_the_script() {
    let dir = tempfile::tempdir().unwrap();
    let model = generate(dir.path(), "line", "5", "1");
    let script = dir.path().join("q.smt2");
    let out = obsyn(&[
        "solve",
        "--problem",
        "pdoop",
        "--model",
        path_str(&model),
        "--budget",
        "2",
        "--threshold",
        "3/2",
        "--strict",
        "--emit-smt",
        path_str(&script),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&script).unwrap();
    assert!(text.contains("(set-logic QF_NRA)"));
    assert!(text.contains("(assert (< (* (/ 1 4) (+ r_s0 r_s1 r_s3 r_s4)) (/ 3 2)))"));
    assert!(text.contains("(assert (or (= x_o1_l 0) (= x_o1_l 1)))"));
}

#[test]
fn mdp_opt_and_min_budget() {
    let dir = tempfile::tempdir().unwrap();
    let model = generate(dir.path(), "grid", "3", "1");
    let out = obsyn(&["mdp-opt", "--model", path_str(&model)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("value 9/4\n"));
    let witness = dir.path().join("mpbp.json");
    let out = obsyn(&[
        "min-budget",
        "--model",
        path_str(&model),
        "--out",
        path_str(&witness),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("budget 2\n"));
    assert_eq!(
        code(&obsyn(&[
            "verify",
            "--model",
            path_str(&model),
            "--witness",
            path_str(&witness)
        ])),
        0
    );
}

#[test]
fn bracket_reports_exact_and_infeasible_optima() {
    let dir = tempfile::tempdir().unwrap();
    let line = generate(dir.path(), "line", "5", "1");
    let out = obsyn(&[
        "bracket",
        "--problem",
        "pdoop",
        "--model",
        path_str(&line),
        "--budget",
        "2",
        "--backend",
        "enum",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "optimum = 3/2");
    let sink = generate(dir.path(), "line-sink", "7", "1/2");
    let out = obsyn(&[
        "bracket",
        "--problem",
        "pdoop",
        "--model",
        path_str(&sink),
        "--budget",
        "2",
        "--backend",
        "enum",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("infeasible at all probed τ"));
}

#[test]
fn enumerative_bench_rows_are_deterministic() {
    let cfg = SolverConfig {
        solver_cmd: None,
        ..SolverConfig::default()
    };
    let rows: Vec<_> = paper_suite()
        .into_iter()
        .filter(|r| {
            matches!(
                r.kind,
                RowKind::Decide {
                    backend: Backend::Enum,
                    ..
                }
            ) || matches!(r.kind, RowKind::MdpOptimum)
        })
        .filter(|r| r.size < 100)
        .collect();
    let strip = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let mut fields: Vec<&str> = l.split(',').collect();
                // the seconds column, counted from the end because model ids may contain commas
                let n = fields.len();
                fields.remove(n - 5);
                fields.join(",")
            })
            .collect()
    };
    let a: Vec<_> = rows.iter().map(|r| run_row(r, &cfg)).collect();
    let b: Vec<_> = rows.iter().map(|r| run_row(r, &cfg)).collect();
    assert!(a.iter().all(|r| r.matches), "{}", records_to_csv(&a));
    assert_eq!(strip(records_to_csv(&a)), strip(records_to_csv(&b)));
}
