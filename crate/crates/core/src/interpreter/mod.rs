//! Execution of closed models under cooperative scheduling: exhaustive
//! exploration of scheduler choices, seeded random runs, and contract
//! monitoring of the resulting traces.

mod eval;
mod machine;
mod monitor;
mod program;
mod state;

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::abs_ir::AbsModel;

pub use eval::{Evaluator, Scope};
pub use machine::{Choice, Entry, Event, Machine, Snapshot, Trace, TraceEntry};
pub use monitor::{monitor, Monitor, Violation, ViolationKind};
pub use program::{Program, Value};
pub use state::{Config, Object, Process};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpError {
    #[error("malformed entry `{0}`, expected CLASS.METHOD(ARGS)")]
    BadEntry(String),
    #[error("unknown entry method {0}")]
    UnknownEntry(String),
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    /// Longest schedule considered, in steps.
    pub max_depth: usize,
    /// Check contracts on every transition.
    pub monitor: bool,
    /// Number of maximal schedules whose traces are kept.
    pub max_traces: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_depth: 10_000,
            monitor: false,
            max_traces: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub violation: Violation,
    /// The schedule leading to the violation, one event per line.
    #[serde(skip)]
    pub trace: Trace,
}

#[derive(Debug, Clone, Serialize)]
pub struct Exploration {
    pub entry: String,
    /// Values the entry future is resolved with on some schedule.
    pub results: BTreeSet<Value>,
    pub configurations: usize,
    pub transitions: usize,
    /// False iff the depth bound cut some schedule.
    pub exhausted: bool,
    /// Final configurations with a process that can never finish.
    pub deadlocks: usize,
    pub stuck: BTreeSet<String>,
    pub violations: Vec<ViolationReport>,
    /// Traces of maximal schedules, one per distinct final configuration.
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl Exploration {
    pub fn result_ints(&self) -> BTreeSet<i64> {
        self.results
            .iter()
            .filter_map(|v| match v {
                Value::Int(n) => Some(*n),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RandomRun {
    pub result: Option<Value>,
    pub trace: Trace,
    pub steps: usize,
    /// No process can move any more.
    pub finished: bool,
}

const MAX_VIOLATION_REPORTS: usize = 100;

pub struct Interpreter {
    machine: Machine,
}

struct Frame {
    cfg: Config,
    choices: Vec<Choice>,
    next: usize,
    entries: Vec<TraceEntry>,
}

fn path(stack: &[Frame], last: &[TraceEntry]) -> Trace {
    let mut entries: Vec<TraceEntry> = stack
        .iter()
        .flat_map(|f| f.entries.iter().cloned())
        .collect();
    entries.extend(last.iter().cloned());
    Trace { entries }
}

impl Interpreter {
    pub fn new(model: &AbsModel) -> Interpreter {
        Interpreter {
            machine: Machine::new(Program::compile(model)),
        }
    }

    pub fn model(&self) -> &AbsModel {
        &self.machine.prog.model
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    /// Enabled choices of `cfg` with their successors and events.
    pub fn step_choices(&self, cfg: &Config) -> Vec<(Choice, Config, Vec<TraceEntry>)> {
        self.machine
            .choices(cfg)
            .into_iter()
            .map(|c| {
                let (next, events) = self.machine.step(cfg, c, true);
                (c, next, events)
            })
            .collect()
    }

    pub fn explore(
        &self,
        entry: &Entry,
        opts: &ExploreOptions,
    ) -> Result<Exploration, InterpError> {
        let record = opts.monitor || opts.max_traces > 0;
        let (init, roots, entries) = self.machine.initial(entry, record)?;
        let monitor = Monitor::new(self.model());
        let mut out = Exploration {
            entry: entry.to_string(),
            results: BTreeSet::new(),
            configurations: 1,
            transitions: 0,
            exhausted: true,
            deadlocks: 0,
            stuck: BTreeSet::new(),
            violations: Vec::new(),
            traces: Vec::new(),
        };
        if opts.monitor {
            self.monitor_step(&monitor, &[], &entries, &mut out);
        }
        let mut seen = HashSet::new();
        seen.insert(init.canonical(roots));
        let mut stack = Vec::new();
        self.visit(init, entries, &mut stack, &mut out, opts);

        while let Some(top) = stack.last_mut() {
            if top.next == top.choices.len() {
                stack.pop();
                continue;
            }
            let choice = top.choices[top.next];
            top.next += 1;
            let (next, entries) = self.machine.step(&top.cfg, choice, record);
            out.transitions += 1;
            if opts.monitor {
                self.monitor_step(&monitor, &stack, &entries, &mut out);
            }
            if !seen.insert(next.canonical(roots)) {
                continue;
            }
            out.configurations += 1;
            if stack.len() >= opts.max_depth {
                if let Some(v) = next.resolved(0) {
                    out.results.insert(v);
                }
                out.exhausted = false;
                continue;
            }
            self.visit(next, entries, &mut stack, &mut out, opts);
        }
        Ok(out)
    }

    fn monitor_step(
        &self,
        monitor: &Monitor,
        stack: &[Frame],
        entries: &[TraceEntry],
        out: &mut Exploration,
    ) {
        let offset: usize = stack.iter().map(|f| f.entries.len()).sum();
        let mut found = Vec::new();
        for (k, e) in entries.iter().enumerate() {
            monitor.entry(offset + k, e, &mut found);
        }
        for violation in found {
            if out.violations.len() >= MAX_VIOLATION_REPORTS {
                return;
            }
            out.violations.push(ViolationReport {
                violation,
                trace: path(stack, entries),
            });
        }
    }

    /// Records a newly reached configuration and pushes it for expansion.
    fn visit(
        &self,
        cfg: Config,
        entries: Vec<TraceEntry>,
        stack: &mut Vec<Frame>,
        out: &mut Exploration,
        opts: &ExploreOptions,
    ) {
        if let Some(v) = cfg.resolved(0) {
            out.results.insert(v);
        }
        let choices = self.machine.choices(&cfg);
        if choices.is_empty() {
            out.stuck.extend(cfg.stuck().map(String::from));
            if cfg.has_pending() {
                out.deadlocks += 1;
            }
            if out.traces.len() < opts.max_traces {
                out.traces.push(path(stack, &entries));
            }
        }
        stack.push(Frame {
            cfg,
            choices,
            next: 0,
            entries,
        });
    }

    /// One schedule picked uniformly at each step by a seeded generator.
    pub fn run_random(
        &self,
        entry: &Entry,
        seed: u64,
        max_steps: usize,
    ) -> Result<RandomRun, InterpError> {
        let (mut cfg, _, mut entries) = self.machine.initial(entry, true)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps = 0;
        let mut finished = false;
        while steps < max_steps {
            let choices = self.machine.choices(&cfg);
            let Some(&c) = choices.choose(&mut rng) else {
                finished = true;
                break;
            };
            let (next, events) = self.machine.step(&cfg, c, true);
            cfg = next;
            entries.extend(events);
            steps += 1;
        }
        Ok(RandomRun {
            result: cfg.resolved(0),
            trace: Trace { entries },
            steps,
            finished,
        })
    }
}

pub fn explore(
    model: &AbsModel,
    entry: &Entry,
    opts: &ExploreOptions,
) -> Result<Exploration, InterpError> {
    Interpreter::new(model).explore(entry, opts)
}

pub fn run_random(
    model: &AbsModel,
    entry: &Entry,
    seed: u64,
    max_steps: usize,
) -> Result<RandomRun, InterpError> {
    Interpreter::new(model).run_random(entry, seed, max_steps)
}
