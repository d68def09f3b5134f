//! Structural deadlock analysis: which methods can never take part in a
//! synchronization cycle, for any program using them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::abs_ir::{AbsModel, Class, Expr, Method, Rhs, Stmt, Target, Type};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeadlockReport {
    pub free_methods: BTreeSet<String>,
    /// Method → reason.
    pub unresolved_methods: BTreeMap<String, String>,
}

impl DeadlockReport {
    pub fn all_free(&self) -> bool {
        self.unresolved_methods.is_empty()
    }
}

impl fmt::Display for DeadlockReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, reason) in &self.unresolved_methods {
            writeln!(f, "{m}: unresolved ({reason})")?;
        }
        write!(
            f,
            "{} structurally deadlock-free, {} unresolved",
            self.free_methods.len(),
            self.unresolved_methods.len()
        )
    }
}

/// Where a future stored in a local came from.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Call {
        on_this: bool,
        fresh_receiver: bool,
        targets: Vec<String>,
        method: String,
    },
    Unknown,
}

#[derive(Debug)]
enum Sync {
    /// Synchronizes on a future-typed parameter.
    Param,
    Future(Origin),
}

#[derive(Debug)]
struct Summary {
    syncs: Vec<Sync>,
    /// Calls on receivers that are not fresh: callee methods.
    calls: Vec<String>,
}

fn key(class: &str, method: &str) -> String {
    format!("{class}.{method}")
}

struct Scan<'a> {
    model: &'a AbsModel,
    class: &'a Class,
    types: BTreeMap<String, Type>,
    params: BTreeSet<String>,
    /// Locals bound only to `new` expressions without `this` among the arguments.
    fresh: BTreeMap<String, bool>,
    origins: BTreeMap<String, Vec<Origin>>,
    syncs: Vec<(String, bool)>,
    calls: Vec<String>,
}

impl<'a> Scan<'a> {
    fn targets(&self, callee: &Expr, method: &str) -> Vec<String> {
        let ty = match callee {
            Expr::This => return vec![key(&self.class.name, method)],
            Expr::Var(v) => self.types.get(v).or_else(|| self.class.field_type(v)),
            Expr::Field(f) => self.class.field_type(f),
            _ => None,
        };
        match ty {
            Some(Type::Named(t)) => self
                .model
                .implementors(t)
                .iter()
                .filter(|c| c.method(method).is_some())
                .map(|c| key(&c.name, method))
                .collect(),
            _ => Vec::new(),
        }
    }

    fn is_fresh(&self, callee: &Expr) -> bool {
        matches!(callee, Expr::Var(v) if self.fresh.get(v) == Some(&true))
    }

    fn bind(&mut self, name: &str, rhs: &Rhs) {
        match rhs {
            Rhs::New { args, .. } => {
                let ok = !args.iter().any(mentions_this);
                let e = self.fresh.entry(name.to_string()).or_insert(true);
                *e &= ok;
            }
            _ => {
                self.fresh.insert(name.to_string(), false);
            }
        }
        let origin = match rhs {
            Rhs::AsyncCall {
                callee,
                method,
                args,
            } => {
                let fresh_receiver = self.is_fresh(callee) && !args.iter().any(mentions_this);
                Origin::Call {
                    on_this: matches!(callee, Expr::This),
                    fresh_receiver,
                    targets: self.targets(callee, method),
                    method: method.clone(),
                }
            }
            _ => Origin::Unknown,
        };
        self.origins
            .entry(name.to_string())
            .or_default()
            .push(origin);
    }

    fn rhs(&mut self, rhs: &Rhs) {
        match rhs {
            Rhs::Get(e) => self.sync(e, true),
            Rhs::AsyncCall {
                callee,
                method,
                args,
            } => {
                let fresh = self.is_fresh(callee) && !args.iter().any(mentions_this);
                if !fresh {
                    let t = self.targets(callee, method);
                    self.calls.extend(t);
                }
            }
            Rhs::SyncCall { callee, method, .. } => {
                let t = self.targets(callee, method);
                self.calls.extend(t);
            }
            _ => {}
        }
    }

    fn sync(&mut self, e: &Expr, blocking: bool) {
        let name = match e {
            Expr::Var(v) => v.clone(),
            Expr::Field(f) => format!("this.{f}"),
            _ => String::new(),
        };
        self.syncs.push((name, blocking));
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            match s {
                Stmt::VarDecl { ty, name, init } => {
                    self.types.insert(name.clone(), ty.clone());
                    if let Some(r) = init {
                        self.rhs(r);
                        self.bind(name, r);
                    }
                }
                Stmt::Assign { target, value } => {
                    self.rhs(value);
                    if let Target::Var(v) = target {
                        if self.types.contains_key(v) {
                            self.bind(v, value);
                        }
                    }
                }
                Stmt::Rhs(r) | Stmt::Return(r) => self.rhs(r),
                Stmt::Await(g) => {
                    for e in g {
                        self.sync(e, false);
                    }
                }
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    self.stmts(then_branch);
                    if let Some(e) = else_branch {
                        self.stmts(e);
                    }
                }
                Stmt::While { body, .. } | Stmt::Block(body) => self.stmts(body),
                Stmt::Skip => {}
            }
        }
    }
}

fn mentions_this(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |s| found |= matches!(s, Expr::This));
    found
}

fn summarize(model: &AbsModel, class: &Class, m: &Method) -> Summary {
    let mut scan = Scan {
        model,
        class,
        types: m
            .sig
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect(),
        params: m
            .sig
            .params
            .iter()
            .filter(|p| p.ty.is_fut())
            .map(|p| p.name.clone())
            .collect(),
        fresh: BTreeMap::new(),
        origins: BTreeMap::new(),
        syncs: Vec::new(),
        calls: Vec::new(),
    };
    scan.stmts(&m.body);
    let mut syncs = Vec::new();
    for (name, _) in &scan.syncs {
        if scan.params.contains(name) {
            syncs.push(Sync::Param);
            continue;
        }
        match scan.origins.get(name) {
            Some(os) => syncs.extend(os.iter().cloned().map(Sync::Future)),
            None => syncs.push(Sync::Future(Origin::Unknown)),
        }
    }
    Summary {
        syncs,
        calls: scan.calls,
    }
}

/// Why a method is not (yet) known to be free, given the current free set.
fn blocker(s: &Summary, free: &BTreeSet<String>) -> Option<String> {
    for sync in &s.syncs {
        match sync {
            Sync::Param => return Some("takes future parameter".into()),
            Sync::Future(Origin::Unknown) => {
                return Some("synchronizes on a future not created in its body".into())
            }
            Sync::Future(Origin::Call {
                on_this: true,
                method,
                ..
            }) => return Some(format!("synchronizes on a call to this object ({method})")),
            _ => {}
        }
    }
    for sync in &s.syncs {
        if let Sync::Future(Origin::Call {
            fresh_receiver: false,
            targets,
            method,
            ..
        }) = sync
        {
            if targets.is_empty() {
                return Some(format!("synchronizes on an unresolvable call ({method})"));
            }
            if let Some(t) = targets.iter().find(|t| !free.contains(*t)) {
                return Some(format!("depends on unresolved method {t}"));
            }
        }
    }
    s.calls
        .iter()
        .find(|t| !free.contains(*t))
        .map(|t| format!("depends on unresolved method {t}"))
}

/// Least fixpoint of structurally deadlock-free methods.
pub fn analyze(model: &AbsModel) -> DeadlockReport {
    let mut summaries = BTreeMap::new();
    for c in &model.classes {
        for m in &c.methods {
            summaries.insert(key(&c.name, &m.sig.name), summarize(model, c, m));
        }
    }
    let mut free = BTreeSet::new();
    loop {
        let before = free.len();
        for (k, s) in &summaries {
            if !free.contains(k) && blocker(s, &free).is_none() {
                free.insert(k.clone());
            }
        }
        if free.len() == before {
            break;
        }
    }
    let unresolved = summaries
        .iter()
        .filter(|(k, _)| !free.contains(*k))
        .map(|(k, s)| {
            let reason = blocker(s, &free).unwrap_or_else(|| "unresolved".into());
            (k.clone(), reason)
        })
        .collect();
    DeadlockReport {
        free_methods: free,
        unresolved_methods: unresolved,
    }
}
