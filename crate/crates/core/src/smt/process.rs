//! Running an external SMT-LIB2 solver on a script.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::{SmtError, SmtScript};

/// Environment variable overriding the solver command template.
pub const SOLVER_ENV: &str = "OBSYN_SOLVER_CMD";

/// Template used when `z3` is on the path and nothing else is configured.
pub const Z3_TEMPLATE: &str = "z3 -smt2 {file}";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub status: SolverStatus,
    /// Everything after the status line.
    pub model: String,
    pub stderr: String,
    pub exit_status: Option<i32>,
    pub seconds: f64,
}

/// The solver command: `OBSYN_SOLVER_CMD` if set, else z3 if it is on the
/// path.
pub fn default_solver_cmd() -> Option<String> {
    if let Ok(cmd) = std::env::var(SOLVER_ENV) {
        if !cmd.trim().is_empty() {
            return Some(cmd);
        }
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .any(|dir| dir.join("z3").is_file())
        .then(|| Z3_TEMPLATE.to_string())
}

fn spawn_reader<R: Read + Send + 'static>(mut r: R) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = r.read_to_string(&mut buf);
        buf
    })
}

/// Runs `template` on the script. A `{file}` placeholder is replaced by the
/// path of a temporary copy of the script; without one, the script is piped
/// to standard input. The process is killed after `timeout`.
pub fn run_solver(
    script: &SmtScript,
    template: &str,
    timeout: Duration,
) -> Result<SolverOutput, SmtError> {
    let words = shell_words::split(template)
        .map_err(|e| SmtError::Launch(format!("bad solver command: {e}")))?;
    if words.is_empty() {
        return Err(SmtError::Launch("empty solver command".into()));
    }
    let mut file = tempfile::Builder::new()
        .suffix(".smt2")
        .tempfile()
        .map_err(|e| SmtError::Launch(e.to_string()))?;
    file.write_all(script.text.as_bytes())
        .map_err(|e| SmtError::Launch(e.to_string()))?;
    file.flush().map_err(|e| SmtError::Launch(e.to_string()))?;
    let path = file.path().to_string_lossy().into_owned();
    let uses_file = words.iter().any(|w| w.contains("{file}"));
    let args: Vec<String> = words.iter().map(|w| w.replace("{file}", &path)).collect();

    let start = Instant::now();
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .stdin(if uses_file {
            Stdio::null()
        } else {
            Stdio::piped()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SmtError::Launch(format!("{}: {e}", args[0])))?;
    if let Some(mut stdin) = child.stdin.take() {
        let text = script.text.clone();
        std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
    }
    let out = spawn_reader(child.stdout.take().expect("piped"));
    let err = spawn_reader(child.stderr.take().expect("piped"));
    let waited = child
        .wait_timeout(timeout)
        .map_err(|e| SmtError::Launch(e.to_string()))?;
    let (timed_out, exit_status) = match waited {
        Some(status) => (false, status.code()),
        None => {
            let _ = child.kill();
            let status = child.wait().ok().and_then(|s| s.code());
            (true, status)
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if timed_out {
        return Ok(SolverOutput {
            status: SolverStatus::Timeout,
            model: String::new(),
            stderr,
            exit_status,
            seconds,
        });
    }

    let mut lines = stdout.lines().skip_while(|l| l.trim().is_empty());
    let first = lines.next().unwrap_or("").trim();
    let status = match first {
        "sat" => SolverStatus::Sat,
        "unsat" => SolverStatus::Unsat,
        "unknown" => SolverStatus::Unknown,
        other => {
            let shown = if other.is_empty() {
                stderr.trim()
            } else {
                other
            };
            return Err(SmtError::MalformedOutput(format!(
                "expected sat, unsat or unknown, got {:?} (exit status {exit_status:?})",
                shown.chars().take(200).collect::<String>()
            )));
        }
    };
    let model = lines.collect::<Vec<_>>().join("\n");
    Ok(SolverOutput {
        status,
        model,
        stderr,
        exit_status,
        seconds,
    })
}
