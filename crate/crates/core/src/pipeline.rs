//! Stage orchestration shared by the command-line tool and the bindings:
//! parse, validate, extract, normalize, then verify, check for deadlocks,
//! or explore.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::abs_ir::{normalize, parse_model, print_model, typecheck, AbsModel};
use crate::c_frontend::parse_translation_unit;
use crate::deadlock::{analyze, DeadlockReport};
use crate::diagnostics::{Diagnostic, Severity};
use crate::extractor::{extract_model, ExtractError};
use crate::interpreter::{Entry, Exploration, ExploreOptions, InterpError, Interpreter};
use crate::smt::{verify_model, PoReport, SmtError, SolverConfig, Verdict, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    C,
    Abs,
}

impl InputKind {
    /// `.abs` is a model; anything else is read as C.
    pub fn of_path(path: &Path) -> InputKind {
        match path.extension().and_then(|e| e.to_str()) {
            Some("abs") => InputKind::Abs,
            _ => InputKind::C,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}", render(.0))]
    Input(Vec<Diagnostic>),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("an entry method is required for exploration")]
    MissingEntry,
    #[error("{0}")]
    Io(String),
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ENVIRONMENT: i32 = 3;

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Verify(VerifyError::Smt(e)) => match e {
                SmtError::UnencodableTerm(_) => EXIT_INPUT,
                _ => EXIT_ENVIRONMENT,
            },
            PipelineError::Io(_) => EXIT_ENVIRONMENT,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Command {
    Extract,
    Verify,
    Deadlock,
    Explore,
    /// Verification and deadlock analysis.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    /// The stage ran and its property does not hold.
    Failed,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub status: StageStatus,
    pub millis: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub solver: SolverConfig,
    pub entry: Option<Entry>,
    pub explore: ExploreOptions,
    /// Directory for one event list per kept schedule.
    pub emit_traces: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub input: String,
    pub kind: InputKind,
    pub stages: Vec<StageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obligations: Option<Vec<PoReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadlock: Option<DeadlockReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration: Option<Exploration>,
    pub exit_code: i32,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.exit_code == EXIT_OK
    }

    fn stage(&mut self, stage: &str, status: StageStatus, start: Instant, message: Option<String>) {
        self.stages.push(StageReport {
            stage: stage.to_string(),
            status,
            millis: start.elapsed().as_millis() as u64,
            message,
        });
    }

    fn fail(&mut self, stage: &str, start: Instant, err: &PipelineError) {
        self.stage(stage, StageStatus::Error, start, Some(err.to_string()));
        self.exit_code = self.exit_code.max(err.exit_code());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable report.
    pub fn text(&self) -> String {
        let mut s = String::new();
        if let Some(m) = &self.model {
            s.push_str(m);
            return s;
        }
        if let Some(pos) = &self.obligations {
            for po in pos {
                let _ = writeln!(s, "{}", po.line());
                for g in po.goals.iter().filter(|g| g.verdict != Verdict::Valid) {
                    let _ = writeln!(s, "  {}: {}", g.verdict.label(), g.origin);
                }
            }
            let valid = pos.iter().filter(|p| p.verdict == Verdict::Valid).count();
            let _ = writeln!(s, "{valid}/{} proof obligations valid", pos.len());
        }
        if let Some(d) = &self.deadlock {
            let _ = writeln!(s, "{d}");
        }
        if let Some(x) = &self.exploration {
            let results: Vec<String> = x.results.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "entry: {}", x.entry);
            let _ = writeln!(s, "results: {{{}}}", results.join(", "));
            let _ = writeln!(s, "configurations: {}", x.configurations);
            let _ = writeln!(s, "exhausted: {}", x.exhausted);
            if x.deadlocks > 0 {
                let _ = writeln!(s, "deadlocked configurations: {}", x.deadlocks);
            }
            for r in &x.stuck {
                let _ = writeln!(s, "stuck: {r}");
            }
            for v in &x.violations {
                let _ = writeln!(s, "violation: {}", v.violation);
            }
        }
        for st in self
            .stages
            .iter()
            .filter(|st| st.status == StageStatus::Error)
        {
            let _ = writeln!(
                s,
                "error in {}: {}",
                st.stage,
                st.message.as_deref().unwrap_or("")
            );
        }
        s
    }
}

fn errors_only(diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect()
}

/// Parses and extracts without normalizing. For `.abs` input this is the
/// parsed model.
pub fn load_model(source: &str, kind: InputKind) -> Result<AbsModel, PipelineError> {
    match kind {
        InputKind::C => {
            let parsed = parse_translation_unit(source).map_err(PipelineError::Input)?;
            Ok(extract_model(&parsed.program)?)
        }
        InputKind::Abs => {
            let m = parse_model(source).map_err(|d| PipelineError::Input(vec![d]))?;
            let errors = errors_only(typecheck(&m));
            if errors.is_empty() {
                Ok(m)
            } else {
                Err(PipelineError::Input(errors))
            }
        }
    }
}

/// Extracted or parsed, then normalized.
pub fn prepare(source: &str, kind: InputKind) -> Result<AbsModel, PipelineError> {
    Ok(normalize(&load_model(source, kind)?))
}

fn write_traces(dir: &Path, x: &Exploration) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for (k, t) in x.traces.iter().enumerate() {
        std::fs::write(dir.join(format!("trace{}.txt", k + 1)), t.to_string()).map_err(io)?;
    }
    Ok(())
}

pub fn run(
    command: Command,
    input: &str,
    source: &str,
    kind: InputKind,
    opts: &PipelineOptions,
) -> RunReport {
    let mut report = RunReport {
        input: input.to_string(),
        kind,
        stages: Vec::new(),
        model: None,
        obligations: None,
        deadlock: None,
        exploration: None,
        exit_code: EXIT_OK,
    };

    let start = Instant::now();
    let model = match load_model(source, kind) {
        Ok(m) => m,
        Err(e) => {
            report.fail(
                if kind == InputKind::C {
                    "extract"
                } else {
                    "parse"
                },
                start,
                &e,
            );
            return report;
        }
    };
    report.stage(
        if kind == InputKind::C {
            "extract"
        } else {
            "parse"
        },
        StageStatus::Ok,
        start,
        None,
    );
    if command == Command::Extract {
        report.model = Some(print_model(&model));
        return report;
    }

    let start = Instant::now();
    let model = normalize(&model);
    report.stage("normalize", StageStatus::Ok, start, None);

    if matches!(command, Command::Verify | Command::All) {
        let start = Instant::now();
        match verify_model(&model, &opts.solver) {
            Ok(pos) => {
                let all_valid = pos.iter().all(|p| p.verdict == Verdict::Valid);
                let status = if all_valid {
                    StageStatus::Ok
                } else {
                    StageStatus::Failed
                };
                report.stage("verify", status, start, None);
                if !all_valid {
                    report.exit_code = report.exit_code.max(EXIT_FAILED);
                }
                report.obligations = Some(pos);
            }
            Err(e) => report.fail("verify", start, &PipelineError::from(e)),
        }
    }

    if matches!(command, Command::Deadlock | Command::All) {
        let start = Instant::now();
        let d = analyze(&model);
        let status = if d.all_free() {
            StageStatus::Ok
        } else {
            StageStatus::Failed
        };
        report.stage("deadlock", status, start, None);
        if !d.all_free() {
            report.exit_code = report.exit_code.max(EXIT_FAILED);
        }
        report.deadlock = Some(d);
    }

    if command == Command::Explore {
        let start = Instant::now();
        let Some(entry) = &opts.entry else {
            report.fail("explore", start, &PipelineError::MissingEntry);
            return report;
        };
        let mut xo = opts.explore.clone();
        xo.monitor = true;
        if opts.emit_traces.is_some() && xo.max_traces == 0 {
            xo.max_traces = 1000;
        }
        match Interpreter::new(&model).explore(entry, &xo) {
            Ok(x) => {
                if let Some(dir) = &opts.emit_traces {
                    if let Err(e) = write_traces(dir, &x) {
                        report.fail("explore", start, &e);
                        return report;
                    }
                }
                let ok = x.violations.is_empty() && x.stuck.is_empty() && x.deadlocks == 0;
                report.stage(
                    "explore",
                    if ok {
                        StageStatus::Ok
                    } else {
                        StageStatus::Failed
                    },
                    start,
                    None,
                );
                if !ok {
                    report.exit_code = report.exit_code.max(EXIT_FAILED);
                }
                report.exploration = Some(x);
            }
            Err(e) => report.fail("explore", start, &PipelineError::from(e)),
        }
    }
    report
}
