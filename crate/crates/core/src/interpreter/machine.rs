//! One scheduling step: pick a process and run it to its next release
//! point, blocking get, or return.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use super::eval::{Evaluator, Scope};
use super::program::{CMethod, Instr, Program, Value};
use super::state::{Config, Object, Process};
use super::InterpError;
use crate::abs_ir::{parse_expr, Expr, Rhs, Target, Type};

const SEGMENT_FUEL: usize = 1_000_000;
const AUTO_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub class: String,
    pub method: String,
    pub args: Vec<Value>,
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}.{}({})", self.class, self.method, args.join(", "))
    }
}

impl FromStr for Entry {
    type Err = InterpError;

    /// `CLASS.METHOD(ARGS)` with literal arguments.
    fn from_str(s: &str) -> Result<Entry, InterpError> {
        let bad = || InterpError::BadEntry(s.to_string());
        let s = s.trim();
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let (class, method) = head.trim().split_once('.').ok_or_else(bad)?;
        if class.is_empty() || method.is_empty() {
            return Err(bad());
        }
        let ev = Evaluator { functions: &[] };
        let mut args = Vec::new();
        for a in inner.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let e = parse_expr(a).map_err(|_| bad())?;
            args.push(ev.eval(&e, &NoScope).map_err(|_| bad())?);
        }
        Ok(Entry {
            class: class.to_string(),
            method: method.to_string(),
            args,
        })
    }
}

struct NoScope;

impl Scope for NoScope {
    fn local(&self, _: &str) -> Option<Value> {
        None
    }
    fn field(&self, _: &str) -> Option<Value> {
        None
    }
    fn this(&self) -> Option<Value> {
        None
    }
    fn future(&self, _: usize) -> Option<Option<Value>> {
        None
    }
}

/// Events of executions; object and future ids are those of the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// `caller` is `None` for the environment's entry call.
    Inv {
        caller: Option<usize>,
        callee: usize,
        fut: usize,
        method: Arc<str>,
        args: Vec<Value>,
    },
    InvR {
        obj: usize,
        fut: usize,
        method: Arc<str>,
        args: Vec<Value>,
    },
    Susp {
        obj: usize,
        fut: usize,
        method: Arc<str>,
    },
    SuspR {
        obj: usize,
        fut: usize,
        method: Arc<str>,
    },
    Fut {
        obj: usize,
        fut: usize,
        value: Value,
    },
    FutR {
        obj: usize,
        fut: usize,
        value: Value,
    },
    Stuck {
        obj: usize,
        fut: usize,
        reason: String,
    },
    NoEv,
}

fn list(args: &[Value]) -> String {
    args.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Inv {
                caller,
                callee,
                fut,
                method,
                args,
            } => {
                let caller = caller.map_or("env".to_string(), |c| format!("o{c}"));
                write!(
                    f,
                    "invEv({caller}, o{callee}, f{fut}, {method}, [{}])",
                    list(args)
                )
            }
            Event::InvR {
                obj,
                fut,
                method,
                args,
            } => write!(f, "invREv(o{obj}, f{fut}, {method}, [{}])", list(args)),
            Event::Susp { obj, fut, method } => write!(f, "suspEv(o{obj}, f{fut}, {method})"),
            Event::SuspR { obj, fut, method } => write!(f, "suspREv(o{obj}, f{fut}, {method})"),
            Event::Fut { obj, fut, value } => write!(f, "futEv(o{obj}, f{fut}, {value})"),
            Event::FutR { obj, fut, value } => write!(f, "futREv(o{obj}, f{fut}, {value})"),
            Event::Stuck { obj, fut, reason } => write!(f, "stuck(o{obj}, f{fut}, {reason})"),
            Event::NoEv => write!(f, "noEv"),
        }
    }
}

/// State of the object an event concerns, taken when the event occurs.
/// For invocation events it is the callee with its parameters bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub this: usize,
    pub class: Arc<str>,
    pub method: Arc<str>,
    pub fields: Vec<(String, Value)>,
    pub locals: Vec<(String, Value)>,
    pub futures: Vec<Option<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub event: Event,
    pub snapshot: Option<Snapshot>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter().map(|e| &e.event)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.entries.iter().enumerate() {
            writeln!(f, "{k}: {}", e.event)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Choice {
    /// Continue the active process of an object after its get resolved.
    Active(usize),
    /// Start or resume a pool process of an idle object.
    Pool(usize, usize),
}

struct ProcScope<'a> {
    prog: &'a Program,
    cfg: &'a Config,
    obj: usize,
    proc: &'a Process,
}

impl Scope for ProcScope<'_> {
    fn local(&self, name: &str) -> Option<Value> {
        let m = &self.prog.methods[self.proc.method];
        m.slot(name).map(|k| self.proc.locals[k])
    }
    fn field(&self, name: &str) -> Option<Value> {
        let o = &self.cfg.objects[self.obj];
        self.prog.classes[o.class].field(name).map(|k| o.fields[k])
    }
    fn this(&self) -> Option<Value> {
        Some(Value::Obj(self.obj))
    }
    fn future(&self, id: usize) -> Option<Option<Value>> {
        self.cfg.futures.get(id).copied()
    }
}

struct ObjScope<'a> {
    prog: &'a Program,
    cfg: &'a Config,
    obj: usize,
}

impl Scope for ObjScope<'_> {
    fn local(&self, _: &str) -> Option<Value> {
        None
    }
    fn field(&self, name: &str) -> Option<Value> {
        let o = &self.cfg.objects[self.obj];
        self.prog.classes[o.class].field(name).map(|k| o.fields[k])
    }
    fn this(&self) -> Option<Value> {
        Some(Value::Obj(self.obj))
    }
    fn future(&self, id: usize) -> Option<Option<Value>> {
        self.cfg.futures.get(id).copied()
    }
}

fn get_operand(i: &Instr) -> Option<&Expr> {
    match i {
        Instr::Decl {
            init: Some(Rhs::Get(e)),
            ..
        }
        | Instr::Assign {
            value: Rhs::Get(e), ..
        }
        | Instr::Eval(Rhs::Get(e))
        | Instr::Return(Rhs::Get(e)) => Some(e),
        _ => None,
    }
}

pub struct Machine {
    pub prog: Program,
}

enum Flow {
    Next,
    Jump(usize),
    /// Leaves the process where it is.
    Blocked,
    Suspended,
    Returned,
}

impl Machine {
    pub fn new(prog: Program) -> Machine {
        Machine { prog }
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator {
            functions: &self.prog.model.functions,
        }
    }

    fn method(&self, p: &Process) -> &CMethod {
        &self.prog.methods[p.method]
    }

    fn guard_ready(&self, cfg: &Config, obj: usize, p: &Process, guard: &[Expr]) -> bool {
        let scope = ProcScope {
            prog: &self.prog,
            cfg,
            obj,
            proc: p,
        };
        let ev = self.evaluator();
        guard.iter().all(|g| match ev.eval(g, &scope) {
            Ok(Value::Fut(k)) => cfg.resolved(k).is_some(),
            Ok(Value::Bool(b)) => b,
            _ => false,
        })
    }

    fn pool_enabled(&self, cfg: &Config, obj: usize, p: &Process) -> bool {
        match self.method(p).code.get(p.pc) {
            Some(Instr::Await(g)) => self.guard_ready(cfg, obj, p, g),
            _ => true,
        }
    }

    fn active_enabled(&self, cfg: &Config, obj: usize, p: &Process) -> bool {
        if p.stuck.is_some() {
            return false;
        }
        let Some(e) = self.method(p).code.get(p.pc).and_then(get_operand) else {
            return true;
        };
        let scope = ProcScope {
            prog: &self.prog,
            cfg,
            obj,
            proc: p,
        };
        match self.evaluator().eval(e, &scope) {
            Ok(Value::Fut(k)) => cfg.resolved(k).is_some(),
            // Evaluation errors surface when the process runs.
            _ => true,
        }
    }

    pub fn choices(&self, cfg: &Config) -> Vec<Choice> {
        let mut out = Vec::new();
        for (k, o) in cfg.objects.iter().enumerate() {
            match &o.active {
                Some(p) => {
                    if self.active_enabled(cfg, k, p) {
                        out.push(Choice::Active(k));
                    }
                }
                None => {
                    for (i, p) in o.pool.iter().enumerate() {
                        if self.pool_enabled(cfg, k, p) {
                            out.push(Choice::Pool(k, i));
                        }
                    }
                }
            }
        }
        out
    }

    fn snapshot(&self, cfg: &Config, obj: usize, p: &Process) -> Snapshot {
        let o = &cfg.objects[obj];
        let class = &self.prog.classes[o.class];
        let m = self.method(p);
        let mut locals: Vec<(String, Value)> = m
            .slots
            .iter()
            .map(|(n, &k)| (n.clone(), p.locals[k]))
            .collect();
        locals.sort();
        Snapshot {
            this: obj,
            class: class.name.clone(),
            method: m.name.clone(),
            fields: class
                .fields
                .iter()
                .zip(&o.fields)
                .map(|((n, _), v)| (n.clone(), *v))
                .collect(),
            locals,
            futures: cfg.futures.clone(),
        }
    }

    fn args(&self, p: &Process) -> Vec<Value> {
        p.locals[..self.method(p).n_params].to_vec()
    }

    /// Creates an object; parameters first, then field initializers in order.
    pub fn instantiate(
        &self,
        cfg: &mut Config,
        class: usize,
        args: &[Value],
    ) -> Result<usize, String> {
        let c = &self.prog.classes[class];
        if args.len() != c.n_params {
            return Err(format!("{} expects {} arguments", c.name, c.n_params));
        }
        let mut fields: Vec<Value> = c
            .fields
            .iter()
            .map(|(_, t)| super::program::default_value(t))
            .collect();
        fields[..args.len()].copy_from_slice(args);
        let id = cfg.objects.len();
        cfg.objects.push(Object {
            class,
            fields,
            active: None,
            pool: Vec::new(),
        });
        for k in c.n_params..c.fields.len() {
            if let Some(e) = &c.inits[k] {
                let scope = ObjScope {
                    prog: &self.prog,
                    cfg,
                    obj: id,
                };
                let v = self.evaluator().eval(e, &scope)?;
                cfg.objects[id].fields[k] = v;
            }
        }
        Ok(id)
    }

    #[allow(clippy::too_many_arguments)]
    fn invoke(
        &self,
        cfg: &mut Config,
        caller: Option<usize>,
        callee: usize,
        method: &str,
        args: Vec<Value>,
        out: &mut Vec<TraceEntry>,
        record: bool,
    ) -> Result<usize, String> {
        let class = &self.prog.classes[cfg.objects[callee].class];
        let mid = *class
            .methods
            .get(method)
            .ok_or_else(|| format!("{} has no method {method}", class.name))?;
        let m = &self.prog.methods[mid];
        if args.len() != m.n_params {
            return Err(format!(
                "{}.{method} expects {} arguments",
                class.name, m.n_params
            ));
        }
        let mut locals = m.slot_defaults.clone();
        locals[..args.len()].copy_from_slice(&args);
        let fut = cfg.futures.len();
        cfg.futures.push(None);
        let p = Process {
            fut,
            method: mid,
            locals,
            pc: 0,
            started: false,
            stuck: None,
        };
        let snapshot = record.then(|| self.snapshot(cfg, callee, &p));
        cfg.objects[callee].pool.push(p);
        out.push(TraceEntry {
            event: Event::Inv {
                caller,
                callee,
                fut,
                method: m.name.clone(),
                args,
            },
            snapshot,
        });
        Ok(fut)
    }

    fn eval(&self, cfg: &Config, obj: usize, p: &Process, e: &Expr) -> Result<Value, String> {
        let scope = ProcScope {
            prog: &self.prog,
            cfg,
            obj,
            proc: p,
        };
        self.evaluator().eval(e, &scope)
    }

    /// `Ok(None)` when a get blocks.
    fn rhs(
        &self,
        cfg: &mut Config,
        obj: usize,
        p: &Process,
        r: &Rhs,
        out: &mut Vec<TraceEntry>,
        record: bool,
    ) -> Result<Option<Value>, String> {
        match r {
            Rhs::Expr(e) => self.eval(cfg, obj, p, e).map(Some),
            Rhs::Get(e) => match self.eval(cfg, obj, p, e)? {
                Value::Fut(k) => match cfg.resolved(k) {
                    Some(value) => {
                        let snapshot = record.then(|| self.snapshot(cfg, obj, p));
                        out.push(TraceEntry {
                            event: Event::FutR { obj, fut: k, value },
                            snapshot,
                        });
                        Ok(Some(value))
                    }
                    None => Ok(None),
                },
                other => Err(format!("get on non-future {other}")),
            },
            Rhs::AsyncCall {
                callee,
                method,
                args,
            } => {
                let target = match self.eval(cfg, obj, p, callee)? {
                    Value::Obj(k) => k,
                    Value::Null => return Err(format!("call of {method} on null")),
                    other => return Err(format!("call of {method} on {other}")),
                };
                let args = args
                    .iter()
                    .map(|a| self.eval(cfg, obj, p, a))
                    .collect::<Result<Vec<_>, _>>()?;
                let fut = self.invoke(cfg, Some(obj), target, method, args, out, record)?;
                Ok(Some(Value::Fut(fut)))
            }
            Rhs::New { class, args } => {
                let ci = *self
                    .prog
                    .class_index
                    .get(class)
                    .ok_or_else(|| format!("unknown class {class}"))?;
                let args = args
                    .iter()
                    .map(|a| self.eval(cfg, obj, p, a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some(Value::Obj(self.instantiate(cfg, ci, &args)?)))
            }
            Rhs::SyncCall { .. } => unreachable!("lowered at compile time"),
        }
    }

    fn assign(
        &self,
        cfg: &mut Config,
        obj: usize,
        p: &mut Process,
        t: &Target,
        v: Value,
    ) -> Result<(), String> {
        let name = match t {
            Target::Var(v) => v,
            Target::Field(f) => f,
        };
        if let Target::Var(n) = t {
            if let Some(k) = self.method(p).slot(n) {
                p.locals[k] = v;
                return Ok(());
            }
        }
        let o = &mut cfg.objects[obj];
        let k = self.prog.classes[o.class]
            .field(name)
            .ok_or_else(|| format!("unknown variable {name}"))?;
        o.fields[k] = v;
        Ok(())
    }

    fn instr(
        &self,
        cfg: &mut Config,
        obj: usize,
        p: &mut Process,
        out: &mut Vec<TraceEntry>,
        record: bool,
    ) -> Result<Flow, String> {
        let code = &self.prog.methods[p.method].code;
        let Some(instr) = code.get(p.pc) else {
            cfg.futures[p.fut] = Some(Value::Unit);
            self.returned(cfg, obj, p, Value::Unit, out, record);
            return Ok(Flow::Returned);
        };
        match instr {
            Instr::Decl { slot, init } => {
                let v = match init {
                    Some(r) => match self.rhs(cfg, obj, p, r, out, record)? {
                        Some(v) => v,
                        None => return Ok(Flow::Blocked),
                    },
                    None => self.method(p).slot_defaults[*slot],
                };
                p.locals[*slot] = v;
                Ok(Flow::Next)
            }
            Instr::Assign { target, value } => match self.rhs(cfg, obj, p, value, out, record)? {
                Some(v) => {
                    self.assign(cfg, obj, p, target, v)?;
                    Ok(Flow::Next)
                }
                None => Ok(Flow::Blocked),
            },
            Instr::Eval(r) => match self.rhs(cfg, obj, p, r, out, record)? {
                Some(_) => Ok(Flow::Next),
                None => Ok(Flow::Blocked),
            },
            Instr::Await(_) => Ok(Flow::Suspended),
            Instr::Branch { cond, else_to } => match self.eval(cfg, obj, p, cond)? {
                Value::Bool(true) => Ok(Flow::Next),
                Value::Bool(false) => Ok(Flow::Jump(*else_to)),
                other => Err(format!("non-boolean condition {other}")),
            },
            Instr::Jump(t) => Ok(Flow::Jump(*t)),
            Instr::Return(r) => match self.rhs(cfg, obj, p, r, out, record)? {
                Some(v) => {
                    cfg.futures[p.fut] = Some(v);
                    self.returned(cfg, obj, p, v, out, record);
                    Ok(Flow::Returned)
                }
                None => Ok(Flow::Blocked),
            },
        }
    }

    fn returned(
        &self,
        cfg: &Config,
        obj: usize,
        p: &Process,
        value: Value,
        out: &mut Vec<TraceEntry>,
        record: bool,
    ) {
        let snapshot = record.then(|| self.snapshot(cfg, obj, p));
        out.push(TraceEntry {
            event: Event::Fut {
                obj,
                fut: p.fut,
                value,
            },
            snapshot,
        });
    }

    /// Successor of `cfg` under `choice`, with the events emitted.
    /// Snapshots are attached only when `record` is set.
    pub fn step(&self, cfg: &Config, choice: Choice, record: bool) -> (Config, Vec<TraceEntry>) {
        let mut cfg = cfg.clone();
        let mut out = Vec::new();
        let (obj, mut p) = match choice {
            Choice::Active(o) => (o, cfg.objects[o].active.take().expect("active process")),
            Choice::Pool(o, i) => (o, cfg.objects[o].pool.remove(i)),
        };
        let at_await = matches!(self.method(&p).code.get(p.pc), Some(Instr::Await(_)));
        if !p.started {
            p.started = true;
            let snapshot = record.then(|| self.snapshot(&cfg, obj, &p));
            out.push(TraceEntry {
                event: Event::InvR {
                    obj,
                    fut: p.fut,
                    method: self.method(&p).name.clone(),
                    args: self.args(&p),
                },
                snapshot,
            });
        } else if at_await {
            let snapshot = record.then(|| self.snapshot(&cfg, obj, &p));
            out.push(TraceEntry {
                event: Event::SuspR {
                    obj,
                    fut: p.fut,
                    method: self.method(&p).name.clone(),
                },
                snapshot,
            });
        }
        if at_await {
            p.pc += 1;
        }
        let mut fuel = SEGMENT_FUEL;
        loop {
            if fuel == 0 {
                self.stuck(
                    &mut cfg,
                    obj,
                    p,
                    "segment step limit exceeded".into(),
                    &mut out,
                );
                break;
            }
            fuel -= 1;
            match self.instr(&mut cfg, obj, &mut p, &mut out, record) {
                Ok(Flow::Next) => p.pc += 1,
                Ok(Flow::Jump(t)) => p.pc = t,
                Ok(Flow::Blocked) => {
                    cfg.objects[obj].active = Some(p);
                    break;
                }
                Ok(Flow::Suspended) => {
                    let snapshot = record.then(|| self.snapshot(&cfg, obj, &p));
                    out.push(TraceEntry {
                        event: Event::Susp {
                            obj,
                            fut: p.fut,
                            method: self.method(&p).name.clone(),
                        },
                        snapshot,
                    });
                    cfg.objects[obj].pool.push(p);
                    break;
                }
                Ok(Flow::Returned) => break,
                Err(reason) => {
                    self.stuck(&mut cfg, obj, p, reason, &mut out);
                    break;
                }
            }
        }
        if out.is_empty() {
            out.push(TraceEntry {
                event: Event::NoEv,
                snapshot: None,
            });
        }
        (cfg, out)
    }

    fn stuck(
        &self,
        cfg: &mut Config,
        obj: usize,
        mut p: Process,
        reason: String,
        out: &mut Vec<TraceEntry>,
    ) {
        out.push(TraceEntry {
            event: Event::Stuck {
                obj,
                fut: p.fut,
                reason: reason.clone(),
            },
            snapshot: None,
        });
        p.stuck = Some(reason);
        cfg.objects[obj].active = Some(p);
    }

    fn auto_object(
        &self,
        cfg: &mut Config,
        class: usize,
        depth: usize,
    ) -> Result<Value, InterpError> {
        let c = &self.prog.model.classes[class];
        let mut args = Vec::new();
        for p in &c.params {
            let v = match &p.ty {
                Type::Named(t) if depth < AUTO_DEPTH => {
                    match self.prog.model.implementors(t).first() {
                        Some(impl_class) => {
                            let ci = self.prog.class_index[&impl_class.name];
                            self.auto_object(cfg, ci, depth + 1)?
                        }
                        None => Value::Null,
                    }
                }
                t => super::program::default_value(t),
            };
            args.push(v);
        }
        let id = self
            .instantiate(cfg, class, &args)
            .map_err(|e| InterpError::BadEntry(format!("creating {}: {e}", c.name)))?;
        Ok(Value::Obj(id))
    }

    /// Objects for the entry class and its parameters, then the entry call.
    /// Returns the configuration and the number of objects created up front.
    pub fn initial(
        &self,
        entry: &Entry,
        record: bool,
    ) -> Result<(Config, usize, Vec<TraceEntry>), InterpError> {
        let ci = *self
            .prog
            .class_index
            .get(&entry.class)
            .ok_or_else(|| InterpError::UnknownEntry(entry.to_string()))?;
        if !self.prog.classes[ci].methods.contains_key(&entry.method) {
            return Err(InterpError::UnknownEntry(entry.to_string()));
        }
        let mut cfg = Config::default();
        let Value::Obj(target) = self.auto_object(&mut cfg, ci, 0)? else {
            unreachable!("auto_object returns an object");
        };
        let roots = cfg.objects.len();
        let mut out = Vec::new();
        self.invoke(
            &mut cfg,
            None,
            target,
            &entry.method,
            entry.args.clone(),
            &mut out,
            record,
        )
        .map_err(|e| InterpError::BadEntry(format!("{entry}: {e}")))?;
        Ok((cfg, roots, out))
    }
}
