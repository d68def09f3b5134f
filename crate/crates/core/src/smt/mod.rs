//! SMT-LIB encoding of goals and verdicts from an external solver.

pub mod encode;
pub mod solver;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abs_ir::{AbsModel, FunDef};
use crate::prover::{generate_obligations, symbolic_execute, PoKind, ProverError, Sequent};

pub use encode::{encode, FunctionEncoding, SmtScript};
pub use solver::{run_solver, SolverConfig, SolverResult};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error("solver unavailable: {0}")]
    SolverUnavailable(String),
    #[error("malformed solver output: {0}")]
    MalformedSolverOutput(String),
    #[error("cannot encode: {0}")]
    UnencodableTerm(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("{class}.{method}: {source}")]
    Prover {
        class: String,
        method: String,
        source: ProverError,
    },
    #[error(transparent)]
    Smt(#[from] SmtError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Valid,
    NotValid,
    Unknown,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Valid => "VALID",
            Verdict::NotValid => "NOT_VALID",
            Verdict::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GoalReport {
    pub origin: String,
    pub verdict: Verdict,
    /// Counterexample text for `NotValid` goals.
    pub model: Option<String>,
    pub millis: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoReport {
    pub class: String,
    pub method: String,
    pub kind: PoKind,
    pub verdict: Verdict,
    pub goals: Vec<GoalReport>,
    pub millis: u64,
}

impl PoReport {
    pub fn line(&self) -> String {
        format!(
            "{}.{}: {} ({} goals, {} ms)",
            self.class,
            self.method,
            self.verdict.label(),
            self.goals.len(),
            self.millis
        )
    }
}

/// Valid iff every goal is; any falsified goal makes the whole NotValid;
/// otherwise Unknown.
pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Valid;
    for v in verdicts {
        match v {
            Verdict::NotValid => return Verdict::NotValid,
            Verdict::Unknown => out = Verdict::Unknown,
            Verdict::Valid => {}
        }
    }
    out
}

fn goal_report(seq: &Sequent, script: &str, config: &SolverConfig) -> Result<GoalReport, SmtError> {
    let start = Instant::now();
    let (verdict, model) = match run_solver(script, config)? {
        SolverResult::Unsat => (Verdict::Valid, None),
        SolverResult::Sat(m) => (Verdict::NotValid, m),
        SolverResult::Unknown => (Verdict::Unknown, None),
    };
    Ok(GoalReport {
        origin: seq.origin.clone(),
        verdict,
        model,
        millis: start.elapsed().as_millis() as u64,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, SmtError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SmtError::Io(e.to_string()))
}

/// Solves each goal independently.
pub fn discharge(
    goals: &[Sequent],
    functions: &[FunDef],
    config: &SolverConfig,
) -> Result<Vec<GoalReport>, SmtError> {
    let scripts = goals
        .iter()
        .map(|g| encode(g, functions, config.functions).map(|s| s.text()))
        .collect::<Result<Vec<_>, _>>()?;
    pool(config.jobs)?.install(|| {
        goals
            .par_iter()
            .zip(scripts.par_iter())
            .map(|(g, s)| goal_report(g, s, config))
            .collect()
    })
}

/// Goals of every obligation in a normalized model, with their scripts.
pub struct EncodedObligation {
    pub class: String,
    pub method: String,
    pub kind: PoKind,
    pub goals: Vec<Sequent>,
    pub scripts: Vec<String>,
}

pub fn encode_model(
    model: &AbsModel,
    encoding: FunctionEncoding,
) -> Result<Vec<EncodedObligation>, VerifyError> {
    let pos = generate_obligations(model).map_err(|source| VerifyError::Prover {
        class: String::new(),
        method: String::new(),
        source,
    })?;
    let mut out = Vec::new();
    for po in pos {
        let goals = symbolic_execute(&po).map_err(|source| VerifyError::Prover {
            class: po.class.clone(),
            method: po.method.clone(),
            source,
        })?;
        let scripts = goals
            .iter()
            .map(|g| encode(g, &model.functions, encoding).map(|s| s.text()))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(EncodedObligation {
            class: po.class,
            method: po.method,
            kind: po.kind,
            goals,
            scripts,
        });
    }
    Ok(out)
}

/// File name used when dumping goal scripts.
pub fn dump_name(class: &str, method: &str, goal: usize) -> String {
    let method = method.trim_start_matches('<').trim_end_matches('>');
    format!("{class}.{method}.goal{goal}.smt2")
}

fn dump(dir: &Path, obligations: &[EncodedObligation]) -> Result<(), SmtError> {
    std::fs::create_dir_all(dir).map_err(|e| SmtError::Io(e.to_string()))?;
    for po in obligations {
        for (k, s) in po.scripts.iter().enumerate() {
            let path = dir.join(dump_name(&po.class, &po.method, k + 1));
            std::fs::write(&path, s)
                .map_err(|e| SmtError::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

/// Generates, executes and discharges every proof obligation of a
/// normalized, typechecked model.
pub fn verify_model(model: &AbsModel, config: &SolverConfig) -> Result<Vec<PoReport>, VerifyError> {
    let obligations = encode_model(model, config.functions)?;
    if let Some(dir) = &config.dump_dir {
        dump(dir, &obligations)?;
    }
    let work: Vec<(usize, &Sequent, &String)> = obligations
        .iter()
        .enumerate()
        .flat_map(|(k, po)| {
            po.goals
                .iter()
                .zip(&po.scripts)
                .map(move |(g, s)| (k, g, s))
        })
        .collect();
    let results: Vec<(usize, GoalReport)> = pool(config.jobs)?.install(|| {
        work.par_iter()
            .map(|(k, g, s)| goal_report(g, s, config).map(|r| (*k, r)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut reports: Vec<PoReport> = obligations
        .iter()
        .map(|po| PoReport {
            class: po.class.clone(),
            method: po.method.clone(),
            kind: po.kind,
            verdict: Verdict::Valid,
            goals: Vec::new(),
            millis: 0,
        })
        .collect();
    for (k, r) in results {
        reports[k].millis += r.millis;
        reports[k].goals.push(r);
    }
    for r in &mut reports {
        r.verdict = combine(r.goals.iter().map(|g| g.verdict));
    }
    Ok(reports)
}
