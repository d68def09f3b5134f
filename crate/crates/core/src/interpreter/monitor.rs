//! Contract checks on concrete traces.

use std::fmt;

use serde::Serialize;

use super::eval::{Evaluator, Scope};
use super::machine::{Event, Snapshot, Trace, TraceEntry};
use super::program::Value;
use crate::abs_ir::{print_expr, AbsModel, Expr, MethodSig, SpecKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    ObjectInvariant,
    Postcondition,
    Precondition,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::ObjectInvariant => "object invariant",
            ViolationKind::Postcondition => "postcondition",
            ViolationKind::Precondition => "precondition",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Index of the event in its trace.
    pub index: usize,
    pub kind: ViolationKind,
    pub class: String,
    pub method: String,
    pub annotation: String,
    pub event: String,
    /// Set when the annotation could not be evaluated.
    pub error: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event {} {}: {} of {}.{} violated: {}",
            self.index, self.event, self.kind, self.class, self.method, self.annotation
        )?;
        if let Some(e) = &self.error {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

struct SnapScope<'a> {
    snap: &'a Snapshot,
    result: Option<Value>,
}

impl Scope for SnapScope<'_> {
    fn local(&self, name: &str) -> Option<Value> {
        if name == "result" {
            if let Some(r) = self.result {
                return Some(r);
            }
        }
        self.snap
            .locals
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
    fn field(&self, name: &str) -> Option<Value> {
        self.snap
            .fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
    fn this(&self) -> Option<Value> {
        Some(Value::Obj(self.snap.this))
    }
    fn future(&self, id: usize) -> Option<Option<Value>> {
        self.snap.futures.get(id).copied()
    }
}

/// The contract a class method is checked against: its interface
/// declaration if any, else its own signature.
fn contract<'a>(model: &'a AbsModel, class: &str, method: &str) -> Option<&'a MethodSig> {
    let c = model.class(class)?;
    model
        .interface_sig(c, method)
        .or_else(|| c.method(method).map(|m| &m.sig))
}

pub struct Monitor<'a> {
    model: &'a AbsModel,
}

impl<'a> Monitor<'a> {
    pub fn new(model: &'a AbsModel) -> Monitor<'a> {
        Monitor { model }
    }

    fn check<'e>(
        &self,
        specs: impl Iterator<Item = &'e Expr>,
        kind: ViolationKind,
        scope: &SnapScope,
        index: usize,
        event: &Event,
        out: &mut Vec<Violation>,
    ) {
        let ev = Evaluator {
            functions: &self.model.functions,
        };
        for spec in specs {
            let error = match ev.eval_bool(spec, scope) {
                Ok(true) => continue,
                Ok(false) => None,
                Err(e) => Some(e),
            };
            out.push(Violation {
                index,
                kind,
                class: scope.snap.class.to_string(),
                method: scope.snap.method.to_string(),
                annotation: print_expr(spec),
                event: event.to_string(),
                error,
            });
        }
    }

    /// Checks one event against the annotations relevant to it.
    pub fn entry(&self, index: usize, entry: &TraceEntry, out: &mut Vec<Violation>) {
        let Some(snap) = &entry.snapshot else {
            return;
        };
        let class = self.model.class(&snap.class);
        let inv = class.into_iter().flat_map(|c| c.specs_of(SpecKind::ObjInv));
        let sig = contract(self.model, &snap.class, &snap.method);
        let scope = |result| SnapScope { snap, result };
        match &entry.event {
            Event::Susp { .. } | Event::SuspR { .. } => self.check(
                inv,
                ViolationKind::ObjectInvariant,
                &scope(None),
                index,
                &entry.event,
                out,
            ),
            Event::Fut { value, .. } => {
                let s = scope(Some(*value));
                self.check(
                    inv,
                    ViolationKind::ObjectInvariant,
                    &s,
                    index,
                    &entry.event,
                    out,
                );
                if let Some(sig) = sig {
                    self.check(
                        sig.specs_of(SpecKind::Ensures),
                        ViolationKind::Postcondition,
                        &s,
                        index,
                        &entry.event,
                        out,
                    );
                }
            }
            Event::Inv { .. } => {
                if let Some(sig) = sig {
                    self.check(
                        sig.specs_of(SpecKind::Requires),
                        ViolationKind::Precondition,
                        &scope(None),
                        index,
                        &entry.event,
                        out,
                    );
                }
            }
            _ => {}
        }
    }
}

/// All contract violations along a trace. Entries without snapshots are
/// not checked.
pub fn monitor(trace: &Trace, model: &AbsModel) -> Vec<Violation> {
    let m = Monitor::new(model);
    let mut out = Vec::new();
    for (k, e) in trace.entries.iter().enumerate() {
        m.entry(k, e, &mut out);
    }
    out
}
