//! Rewrites models into the restricted statement forms expected by the
//! prover, the deadlock analysis and the interpreter.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

/// Normalizes a type-correct model. Idempotent.
pub fn normalize(m: &AbsModel) -> AbsModel {
    let mut out = m.clone();
    for (ci, c) in m.classes.iter().enumerate() {
        let used = class_names(c);
        for (mi, method) in c.methods.iter().enumerate() {
            let mut n = Norm {
                model: m,
                class: Some(c),
                used: used.clone(),
                next: 1,
                frames: vec![method
                    .sig
                    .params
                    .iter()
                    .map(|p| (p.name.clone(), p.ty.clone()))
                    .collect()],
            };
            let mut body = n.block(&method.body, false);
            let ends_in_return = matches!(body.last(), Some(Stmt::Return(_)));
            if method.sig.ret == Type::Unit && !ends_in_return {
                body.push(Stmt::Return(Rhs::Expr(Expr::Unit)));
            }
            out.classes[ci].methods[mi].body = body;
        }
    }
    let mut n = Norm {
        model: m,
        class: None,
        used: BTreeSet::new(),
        next: 1,
        frames: vec![BTreeMap::new()],
    };
    collect_stmt_names(&m.main_block, &mut n.used);
    out.main_block = n.block(&m.main_block, false);
    hoist_parameter_requires(&mut out);
    out
}

/// Moves class-method preconditions that only mention parameters to the
/// implemented interface's signature.
fn hoist_parameter_requires(m: &mut AbsModel) {
    let mut moves: Vec<(String, String, Expr)> = Vec::new();
    for c in &mut m.classes {
        let Some(iface) = c.implements.first().cloned() else {
            continue;
        };
        let fields: BTreeSet<String> = c.field_types().iter().map(|(n, _)| n.to_string()).collect();
        for method in &mut c.methods {
            let params: BTreeSet<&str> =
                method.sig.params.iter().map(|p| p.name.as_str()).collect();
            let mut keep = Vec::new();
            for s in method.sig.specs.drain(..) {
                let movable =
                    s.kind == SpecKind::Requires && parameter_only(&s.expr, &params, &fields);
                if movable {
                    moves.push((iface.clone(), method.sig.name.clone(), s.expr));
                } else {
                    keep.push(s);
                }
            }
            method.sig.specs = keep;
        }
    }
    for (iface, method, e) in moves {
        let target = m
            .interfaces
            .iter_mut()
            .find(|i| i.name == iface)
            .and_then(|i| i.methods.iter_mut().find(|s| s.name == method));
        match target {
            Some(sig) => {
                let spec = Spec::new(SpecKind::Requires, e);
                if !sig.specs.contains(&spec) {
                    // Keep preconditions ahead of postconditions.
                    let at = sig
                        .specs
                        .iter()
                        .position(|s| s.kind != SpecKind::Requires)
                        .unwrap_or(sig.specs.len());
                    sig.specs.insert(at, spec);
                }
            }
            None => {
                // Class-local method: nowhere to move it, put it back.
                for c in &mut m.classes {
                    if c.implements.first() == Some(&iface) {
                        if let Some(mm) = c.methods.iter_mut().find(|mm| mm.sig.name == method) {
                            mm.sig
                                .specs
                                .insert(0, Spec::new(SpecKind::Requires, e.clone()));
                        }
                    }
                }
            }
        }
    }
}

fn parameter_only(e: &Expr, params: &BTreeSet<&str>, fields: &BTreeSet<String>) -> bool {
    let mut ok = true;
    e.walk(&mut |x| match x {
        Expr::Field(_) | Expr::This => ok = false,
        Expr::Var(v) if !params.contains(v.as_str()) || fields.contains(v) => ok = false,
        _ => {}
    });
    ok
}

fn class_names(c: &Class) -> BTreeSet<String> {
    let mut used: BTreeSet<String> = c.field_types().iter().map(|(n, _)| n.to_string()).collect();
    for m in &c.methods {
        used.extend(m.sig.params.iter().map(|p| p.name.clone()));
        collect_stmt_names(&m.body, &mut used);
    }
    used
}

fn collect_stmt_names(body: &[Stmt], used: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::VarDecl { name, .. } => {
                used.insert(name.clone());
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_stmt_names(then_branch, used);
                if let Some(e) = else_branch {
                    collect_stmt_names(e, used);
                }
            }
            Stmt::While { body, .. } | Stmt::Block(body) => collect_stmt_names(body, used),
            _ => {}
        }
    }
}

struct Norm<'a> {
    model: &'a AbsModel,
    class: Option<&'a Class>,
    used: BTreeSet<String>,
    next: usize,
    frames: Vec<BTreeMap<String, Type>>,
}

impl Norm<'_> {
    fn fresh(&mut self) -> String {
        loop {
            let name = format!("tmp_{}", self.next);
            self.next += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        for f in self.frames.iter().rev() {
            if let Some(t) = f.get(name) {
                return Some(t.clone());
            }
        }
        self.class.and_then(|c| c.field_type(name)).cloned()
    }

    fn declare(&mut self, name: &str, ty: &Type) {
        if let Some(f) = self.frames.last_mut() {
            f.insert(name.to_string(), ty.clone());
        }
    }

    fn type_of(&self, e: &Expr) -> Option<Type> {
        match e {
            Expr::Var(v) => self.lookup(v),
            Expr::Field(f) => self.class.and_then(|c| c.field_type(f)).cloned(),
            Expr::This => self.class.map(|c| Type::Named(c.name.clone())),
            _ => None,
        }
    }

    fn call_ret(&self, callee: &Expr, method: &str) -> Type {
        let sig = match (callee, self.class) {
            (Expr::This, Some(c)) => c.method(method).map(|m| &m.sig),
            _ => None,
        };
        let sig = sig.or_else(|| match self.type_of(callee) {
            Some(Type::Named(t)) => self.model.method_sig(&t, method),
            _ => None,
        });
        // Typechecked input always resolves; fall back to Int otherwise.
        sig.map(|s| s.ret.clone()).unwrap_or(Type::Int)
    }

    fn block(&mut self, body: &[Stmt], scoped: bool) -> Vec<Stmt> {
        if scoped {
            self.frames.push(BTreeMap::new());
        }
        let mut out = Vec::new();
        for s in body {
            self.stmt(s, &mut out);
        }
        if scoped {
            self.frames.pop();
        }
        out
    }

    /// Splits a right-hand side into statements that leave only an
    /// expression, an async call, a get, or `new`.
    fn simple_rhs(&mut self, r: &Rhs, out: &mut Vec<Stmt>) -> (Rhs, Option<Type>) {
        match r {
            Rhs::SyncCall {
                callee,
                method,
                args,
            } => {
                let ret = self.call_ret(callee, method);
                let fut = self.fresh();
                let fty = Type::fut(ret.clone());
                self.declare(&fut, &fty);
                out.push(Stmt::VarDecl {
                    ty: fty,
                    name: fut.clone(),
                    init: Some(Rhs::AsyncCall {
                        callee: callee.clone(),
                        method: method.clone(),
                        args: args.clone(),
                    }),
                });
                (Rhs::Get(Expr::Var(fut)), Some(ret))
            }
            Rhs::AsyncCall { callee, method, .. } => {
                let ret = self.call_ret(callee, method);
                (r.clone(), Some(Type::fut(ret)))
            }
            Rhs::Get(e) => {
                let t = self.type_of(e).and_then(|t| t.fut_inner().cloned());
                (r.clone(), t)
            }
            _ => (r.clone(), None),
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>) {
        match s {
            Stmt::VarDecl { ty, name, init } => {
                let init = init.as_ref().map(|r| self.simple_rhs(r, out).0);
                self.declare(name, ty);
                out.push(Stmt::VarDecl {
                    ty: ty.clone(),
                    name: name.clone(),
                    init,
                });
            }
            Stmt::Assign { target, value } => {
                let (value, _) = self.simple_rhs(value, out);
                out.push(Stmt::Assign {
                    target: target.clone(),
                    value,
                });
            }
            Stmt::Rhs(r) => {
                let (r, ty) = self.simple_rhs(r, out);
                match (&r, ty) {
                    (Rhs::Get(_) | Rhs::AsyncCall { .. } | Rhs::New { .. }, ty) => {
                        let ty = match (&r, ty) {
                            (_, Some(t)) => t,
                            (Rhs::New { class, .. }, None) => Type::Named(class.clone()),
                            _ => Type::Unit,
                        };
                        let name = self.fresh();
                        self.declare(&name, &ty);
                        out.push(Stmt::VarDecl {
                            ty,
                            name,
                            init: Some(r),
                        });
                    }
                    // A pure expression statement has no effect.
                    _ => out.push(Stmt::Skip),
                }
            }
            Stmt::Return(r) => {
                let (r, ty) = self.simple_rhs(r, out);
                match r {
                    Rhs::Expr(_) => out.push(Stmt::Return(r)),
                    other => {
                        let ty = match (&other, ty) {
                            (_, Some(t)) => t,
                            (Rhs::New { class, .. }, None) => Type::Named(class.clone()),
                            _ => Type::Int,
                        };
                        let name = self.fresh();
                        self.declare(&name, &ty);
                        out.push(Stmt::VarDecl {
                            ty,
                            name: name.clone(),
                            init: Some(other),
                        });
                        out.push(Stmt::Return(Rhs::Expr(Expr::Var(name))));
                    }
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let then_branch = self.block(then_branch, true);
                let else_branch = else_branch.as_ref().map(|e| self.block(e, true));
                out.push(Stmt::If {
                    cond: cond.clone(),
                    then_branch,
                    else_branch,
                });
            }
            Stmt::While {
                cond,
                invariants,
                body,
            } => {
                let body = self.block(body, true);
                out.push(Stmt::While {
                    cond: cond.clone(),
                    invariants: invariants.clone(),
                    body,
                });
            }
            Stmt::Block(b) => {
                let b = self.block(b, true);
                out.push(Stmt::Block(b));
            }
            Stmt::Await(_) | Stmt::Skip => out.push(s.clone()),
        }
    }
}
