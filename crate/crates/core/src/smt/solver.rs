//! External solver process driver.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::encode::FunctionEncoding;
use super::SmtError;

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub timeout: Duration,
    pub dump_dir: Option<PathBuf>,
    /// Maximum number of concurrent solver processes.
    pub jobs: usize,
    pub functions: FunctionEncoding,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            path: PathBuf::from("z3"),
            timeout: Duration::from_secs(20),
            dump_dir: None,
            jobs: 1,
            functions: FunctionEncoding::Recursive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SolverResult {
    Unsat,
    /// Counterexample text as printed by the solver, if any.
    Sat(Option<String>),
    Unknown,
}

/// Runs the solver on one script. Exceeding the timeout kills the process
/// and yields `Unknown`.
pub fn run_solver(script: &str, config: &SolverConfig) -> Result<SolverResult, SmtError> {
    let mut file = tempfile::Builder::new()
        .prefix("uvc-")
        .suffix(".smt2")
        .tempfile()
        .map_err(|e| SmtError::Io(e.to_string()))?;
    file.write_all(script.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| SmtError::Io(e.to_string()))?;

    let mut child = Command::new(&config.path)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SmtError::SolverUnavailable(format!("{}: {e}", config.path.display())))?;

    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });

    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= config.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                return Ok(SolverResult::Unknown);
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(SmtError::Io(e.to_string())),
        }
    }
    let out = reader.join().unwrap_or_default();
    parse_output(&out)
}

fn parse_output(out: &str) -> Result<SolverResult, SmtError> {
    let mut lines = out.lines();
    let first = lines.next().unwrap_or("").trim();
    match first {
        "unsat" => Ok(SolverResult::Unsat),
        "sat" => {
            let rest: Vec<&str> = lines.collect();
            let model = rest.join("\n");
            Ok(SolverResult::Sat(if model.trim().is_empty() {
                None
            } else {
                Some(model)
            }))
        }
        "unknown" | "timeout" => Ok(SolverResult::Unknown),
        _ => Err(SmtError::MalformedSolverOutput(
            out.lines().take(3).collect::<Vec<_>>().join(" | "),
        )),
    }
}
