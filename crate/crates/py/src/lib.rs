//! Python bindings: models, verification, deadlock analysis and exploration.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use uvc_core::abs_ir::{normalize, print_model, AbsModel};
use uvc_core::deadlock::analyze;
use uvc_core::interpreter::{Entry, ExploreOptions, Interpreter, Value};
use uvc_core::pipeline::{self, Command, InputKind, PipelineOptions};
use uvc_core::smt::{verify_model, SolverConfig};

create_exception!(uvc_py, UvcError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    UvcError::new_err(e.to_string())
}

fn int_result(v: Option<Value>) -> PyResult<Option<i64>> {
    match v {
        None => Ok(None),
        Some(Value::Int(n)) => Ok(Some(n)),
        Some(other) => Err(err(format!("entry returned a non-integer value {other}"))),
    }
}

/// An extracted or hand-written model, kept in both raw and normalized form.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    raw: AbsModel,
    model: AbsModel,
}

impl PyModel {
    fn load(source: &str, kind: InputKind) -> PyResult<PyModel> {
        let raw = pipeline::load_model(source, kind).map_err(err)?;
        let model = normalize(&raw);
        Ok(PyModel { raw, model })
    }
}

#[pyclass(name = "Exploration", frozen, get_all)]
struct PyExploration {
    entry: String,
    results: BTreeSet<i64>,
    configurations: usize,
    transitions: usize,
    exhausted: bool,
    deadlocks: usize,
    violations: Vec<String>,
}

#[pymethods]
impl PyExploration {
    fn __repr__(&self) -> String {
        format!(
            "Exploration(entry={:?}, results={:?}, configurations={}, exhausted={})",
            self.entry, self.results, self.configurations, self.exhausted
        )
    }
}

#[pymethods]
impl PyModel {
    /// Parses and extracts a C program.
    #[staticmethod]
    fn from_c(source: &str) -> PyResult<PyModel> {
        PyModel::load(source, InputKind::C)
    }

    /// Parses a model in concrete syntax.
    #[staticmethod]
    fn from_abs(source: &str) -> PyResult<PyModel> {
        PyModel::load(source, InputKind::Abs)
    }

    fn text(&self) -> String {
        print_model(&self.raw)
    }

    fn normalized_text(&self) -> String {
        print_model(&self.model)
    }

    /// `(class, method, verdict)` for every proof obligation.
    #[pyo3(signature = (solver = "z3", timeout = 20.0, jobs = 1))]
    fn verify(
        &self,
        py: Python<'_>,
        solver: &str,
        timeout: f64,
        jobs: usize,
    ) -> PyResult<Vec<(String, String, String)>> {
        if !(timeout.is_finite() && timeout > 0.0) {
            return Err(err("timeout must be positive"));
        }
        let cfg = SolverConfig {
            path: solver.into(),
            timeout: Duration::from_secs_f64(timeout),
            jobs: jobs.max(1),
            ..SolverConfig::default()
        };
        let reports = py.detach(|| verify_model(&self.model, &cfg)).map_err(err)?;
        Ok(reports
            .into_iter()
            .map(|r| (r.class, r.method, r.verdict.label().to_string()))
            .collect())
    }

    /// `(free methods, {unresolved method: reason})`.
    fn deadlock(&self) -> (Vec<String>, BTreeMap<String, String>) {
        let r = analyze(&self.model);
        (r.free_methods.into_iter().collect(), r.unresolved_methods)
    }

    #[pyo3(signature = (entry, max_depth = 10_000, monitor = true))]
    fn explore(
        &self,
        py: Python<'_>,
        entry: &str,
        max_depth: usize,
        monitor: bool,
    ) -> PyResult<PyExploration> {
        let entry: Entry = entry.parse().map_err(err)?;
        let opts = ExploreOptions {
            max_depth,
            monitor,
            max_traces: 0,
        };
        let x = py
            .detach(|| Interpreter::new(&self.model).explore(&entry, &opts))
            .map_err(err)?;
        Ok(PyExploration {
            results: x.result_ints(),
            entry: x.entry,
            configurations: x.configurations,
            transitions: x.transitions,
            exhausted: x.exhausted,
            deadlocks: x.deadlocks,
            violations: x
                .violations
                .iter()
                .map(|v| v.violation.to_string())
                .collect(),
        })
    }

    /// `(result or None, trace text)` of one seeded random schedule.
    #[pyo3(signature = (entry, seed, max_steps = 100_000))]
    fn run_random(
        &self,
        entry: &str,
        seed: u64,
        max_steps: usize,
    ) -> PyResult<(Option<i64>, String)> {
        let entry: Entry = entry.parse().map_err(err)?;
        let r = Interpreter::new(&self.model)
            .run_random(&entry, seed, max_steps)
            .map_err(err)?;
        Ok((int_result(r.result)?, r.trace.to_string()))
    }
}

/// Model text extracted from a C program.
#[pyfunction]
fn extract(source: &str) -> PyResult<String> {
    Ok(PyModel::from_c(source)?.text())
}

/// Runs one pipeline command and returns the report as JSON text.
/// `kind` is `"c"` or `"abs"`.
#[pyfunction]
#[pyo3(signature = (command, source, kind = "c", entry = None))]
fn run(
    py: Python<'_>,
    command: &str,
    source: &str,
    kind: &str,
    entry: Option<&str>,
) -> PyResult<String> {
    let command = match command {
        "extract" => Command::Extract,
        "verify" => Command::Verify,
        "deadlock" => Command::Deadlock,
        "explore" => Command::Explore,
        "all" => Command::All,
        other => return Err(err(format!("unknown command {other}"))),
    };
    let kind = match kind {
        "c" => InputKind::C,
        "abs" => InputKind::Abs,
        other => return Err(err(format!("unknown input kind {other}"))),
    };
    let opts = PipelineOptions {
        entry: entry.map(str::parse).transpose().map_err(err)?,
        ..PipelineOptions::default()
    };
    Ok(py.detach(|| pipeline::run(command, "<string>", source, kind, &opts).to_json()))
}

#[pymodule]
fn uvc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyExploration>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("UvcError", m.py().get_type::<UvcError>())?;
    Ok(())
}
