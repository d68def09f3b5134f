//! Static checks over models: scoping, typing and annotation placement.

use std::collections::BTreeMap;

use super::ast::*;
use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

pub fn typecheck(m: &AbsModel) -> Vec<Diagnostic> {
    let mut tc = Checker {
        m,
        diags: Vec::new(),
        ctx: String::new(),
    };
    tc.model();
    tc.diags
}

/// Static type of an expression. `Null` is compatible with every reference.
#[derive(Debug, Clone, PartialEq)]
enum Ty {
    T(Type),
    Null,
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Code,
    /// Spec expression; `valueOf` allowed, `result` as given.
    Spec {
        result: bool,
    },
}

struct Scope<'a> {
    class: Option<&'a Class>,
    fields: bool,
    frames: Vec<BTreeMap<String, Type>>,
    result: Option<Type>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<Type> {
        for f in self.frames.iter().rev() {
            if let Some(t) = f.get(name) {
                return Some(t.clone());
            }
        }
        if self.fields {
            if let Some(t) = self.class.and_then(|c| c.field_type(name)) {
                return Some(t.clone());
            }
        }
        None
    }

    fn declare(&mut self, name: &str, ty: Type) -> bool {
        let taken = self.frames.iter().any(|f| f.contains_key(name));
        self.frames
            .last_mut()
            .expect("scope has a frame")
            .insert(name.to_string(), ty);
        !taken
    }
}

struct Checker<'a> {
    m: &'a AbsModel,
    diags: Vec<Diagnostic>,
    ctx: String,
}

impl<'a> Checker<'a> {
    fn error(&mut self, kind: DiagnosticKind, msg: String) {
        let msg = if self.ctx.is_empty() {
            msg
        } else {
            format!("{}: {msg}", self.ctx)
        };
        self.diags
            .push(Diagnostic::error(kind, Pos::default(), msg));
    }

    fn ty_error(&mut self, msg: String) {
        self.error(DiagnosticKind::Type, msg);
    }

    fn type_ok(&mut self, t: &Type) {
        match t {
            Type::Fut(inner) => match **inner {
                Type::Int | Type::Unit | Type::Bool => {}
                _ => self.ty_error(format!("unsupported type `{t}`")),
            },
            Type::Named(n) if self.m.interface(n).is_none() && self.m.class(n).is_none() => {
                self.error(
                    DiagnosticKind::UnknownIdentifier,
                    format!("unknown type `{n}`"),
                );
            }
            _ => {}
        }
    }

    fn model(&mut self) {
        let mut seen = BTreeMap::new();
        for name in self
            .m
            .interfaces
            .iter()
            .map(|i| ("interface", &i.name))
            .chain(self.m.classes.iter().map(|c| ("class", &c.name)))
            .chain(self.m.functions.iter().map(|f| ("function", &f.name)))
        {
            if seen.insert((name.0, name.1.clone()), ()).is_some() {
                self.error(
                    DiagnosticKind::Duplicate,
                    format!("duplicate {} `{}`", name.0, name.1),
                );
            }
        }
        for f in &self.m.functions {
            self.ctx = format!("def {}", f.name);
            self.function(f);
        }
        for i in &self.m.interfaces {
            self.ctx = i.name.clone();
            self.interface(i);
        }
        for c in &self.m.classes {
            self.ctx = c.name.clone();
            self.class(c);
        }
        self.ctx = "main block".into();
        let mut scope = Scope {
            class: None,
            fields: false,
            frames: vec![BTreeMap::new()],
            result: None,
        };
        let main = self.m.main_block.clone();
        self.stmts(&main, &mut scope, None);
        self.ctx.clear();
    }

    fn function(&mut self, f: &FunDef) {
        if f.ret != Type::Int && f.ret != Type::Bool {
            self.ty_error(format!(
                "model function must return Int or Bool, not `{}`",
                f.ret
            ));
        }
        let mut frame = BTreeMap::new();
        for p in &f.params {
            if p.ty != Type::Int && p.ty != Type::Bool {
                self.ty_error(format!(
                    "model function parameter `{}` must be Int or Bool",
                    p.name
                ));
            }
            frame.insert(p.name.clone(), p.ty.clone());
        }
        let scope = Scope {
            class: None,
            fields: false,
            frames: vec![frame],
            result: None,
        };
        if let Some(t) = self.expr(&f.body, &scope, Mode::Code) {
            self.expect_ty(&t, &f.ret, "function body");
        }
    }

    fn params_frame(&mut self, ps: &[Param]) -> BTreeMap<String, Type> {
        let mut frame = BTreeMap::new();
        for p in ps {
            self.type_ok(&p.ty);
            if frame.insert(p.name.clone(), p.ty.clone()).is_some() {
                self.error(
                    DiagnosticKind::Duplicate,
                    format!("duplicate parameter `{}`", p.name),
                );
            }
        }
        frame
    }

    fn interface(&mut self, i: &Interface) {
        for e in &i.extends {
            if self.m.interface(e).is_none() {
                self.error(
                    DiagnosticKind::UnknownIdentifier,
                    format!("unknown interface `{e}`"),
                );
            }
        }
        let mut names = Vec::new();
        for s in &i.methods {
            if names.contains(&&s.name) {
                self.error(
                    DiagnosticKind::Duplicate,
                    format!("duplicate method `{}`", s.name),
                );
            }
            names.push(&s.name);
            self.type_ok(&s.ret);
            let frame = self.params_frame(&s.params);
            let scope = Scope {
                class: None,
                fields: false,
                frames: vec![frame],
                result: Some(s.ret.clone()),
            };
            self.method_specs(&s.name, &s.specs, &scope);
        }
    }

    fn method_specs(&mut self, method: &str, specs: &[Spec], scope: &Scope) {
        for s in specs {
            let mode = match s.kind {
                SpecKind::Requires => Mode::Spec { result: false },
                SpecKind::Ensures => Mode::Spec { result: true },
                k => {
                    self.error(
                        DiagnosticKind::Type,
                        format!("{} is not allowed on method `{method}`", k.name()),
                    );
                    continue;
                }
            };
            self.spec(&s.expr, scope, mode);
        }
    }

    fn spec(&mut self, e: &Expr, scope: &Scope, mode: Mode) {
        if let Some(t) = self.expr(e, scope, mode) {
            self.expect_ty(&t, &Type::Bool, "specification");
        }
    }

    fn class(&mut self, c: &'a Class) {
        match c.implements.as_slice() {
            [i] if self.m.interface(i).is_some() => {}
            [i] => self.error(
                DiagnosticKind::UnknownIdentifier,
                format!("unknown interface `{i}`"),
            ),
            _ => self.error(
                DiagnosticKind::Type,
                "a class must implement exactly one interface".into(),
            ),
        }
        let mut fields = BTreeMap::new();
        for (n, t) in c.field_types() {
            self.type_ok(t);
            if fields.insert(n.to_string(), t.clone()).is_some() {
                self.error(DiagnosticKind::Duplicate, format!("duplicate field `{n}`"));
            }
        }
        let field_scope = Scope {
            class: Some(c),
            fields: true,
            frames: vec![BTreeMap::new()],
            result: None,
        };
        for f in &c.fields {
            if let Some(init) = &f.init {
                if let Some(t) = self.expr(init, &field_scope, Mode::Code) {
                    self.expect_ty(&t, &f.ty, "field initializer");
                }
            }
        }
        for s in &c.specs {
            match s.kind {
                SpecKind::ObjInv | SpecKind::Requires => {
                    self.spec(&s.expr, &field_scope, Mode::Spec { result: false })
                }
                k => self.ty_error(format!("{} is not allowed on a class", k.name())),
            }
        }
        let mut names = Vec::new();
        for method in &c.methods {
            let sig = &method.sig;
            self.ctx = format!("{}.{}", c.name, sig.name);
            if names.contains(&&sig.name) {
                self.error(DiagnosticKind::Duplicate, "duplicate method".into());
            }
            names.push(&sig.name);
            if let Some(isig) = self.m.interface_sig(c, &sig.name) {
                let same_params = isig.params.len() == sig.params.len()
                    && isig
                        .params
                        .iter()
                        .zip(&sig.params)
                        .all(|(a, b)| a.ty == b.ty);
                if isig.ret != sig.ret || !same_params {
                    self.ty_error("signature differs from the interface declaration".into());
                }
            }
            self.type_ok(&sig.ret);
            let frame = self.params_frame(&sig.params);
            let mut scope = Scope {
                class: Some(c),
                fields: true,
                frames: vec![frame],
                result: Some(sig.ret.clone()),
            };
            self.method_specs(&sig.name, &sig.specs, &scope);
            scope.frames.push(BTreeMap::new());
            self.stmts(&method.body, &mut scope, Some(&sig.ret));
            match method.body.last() {
                Some(Stmt::Return(_)) => {}
                _ if sig.ret == Type::Unit => {}
                _ => self.ty_error("missing final return".into()),
            }
            for (k, s) in method.body.iter().enumerate() {
                if k + 1 < method.body.len() && has_return(s) {
                    self.ty_error("return must be the last statement of a method".into());
                }
            }
            if method
                .body
                .last()
                .is_some_and(|s| !matches!(s, Stmt::Return(_)) && has_return(s))
            {
                self.ty_error("return must be the last statement of a method".into());
            }
        }
        self.ctx = c.name.clone();
    }

    fn stmts(&mut self, body: &[Stmt], scope: &mut Scope<'a>, ret: Option<&Type>) {
        for s in body {
            self.stmt(s, scope, ret);
        }
    }

    fn block(&mut self, body: &[Stmt], scope: &mut Scope<'a>, ret: Option<&Type>) {
        scope.frames.push(BTreeMap::new());
        self.stmts(body, scope, ret);
        scope.frames.pop();
    }

    fn stmt(&mut self, s: &Stmt, scope: &mut Scope<'a>, ret: Option<&Type>) {
        match s {
            Stmt::VarDecl { ty, name, init } => {
                self.type_ok(ty);
                if let Some(r) = init {
                    if let Some(t) = self.rhs(r, scope) {
                        self.expect_ty(&t, ty, &format!("initializer of `{name}`"));
                    }
                }
                if !scope.declare(name, ty.clone()) {
                    self.error(
                        DiagnosticKind::Duplicate,
                        format!("`{name}` is already declared"),
                    );
                }
            }
            Stmt::Assign { target, value } => {
                let tt = match target {
                    Target::Var(v) => match scope.lookup(v) {
                        Some(t) => Some(t),
                        None => {
                            self.error(
                                DiagnosticKind::UnknownIdentifier,
                                format!("unknown variable `{v}`"),
                            );
                            None
                        }
                    },
                    Target::Field(f) => match scope.class.and_then(|c| c.field_type(f)) {
                        Some(t) => Some(t.clone()),
                        None => {
                            self.error(
                                DiagnosticKind::UnknownIdentifier,
                                format!("unknown field `{f}`"),
                            );
                            None
                        }
                    },
                };
                if let (Some(tt), Some(t)) = (tt, self.rhs(value, scope)) {
                    self.expect_ty(&t, &tt, "assignment");
                }
            }
            Stmt::Rhs(r) => {
                self.rhs(r, scope);
            }
            Stmt::Await(polls) => {
                if polls.is_empty() {
                    self.ty_error("empty await guard".into());
                }
                for p in polls {
                    match self.expr(p, scope, Mode::Code) {
                        Some(Ty::T(Type::Fut(_))) | None => {}
                        Some(t) => self.ty_error(format!(
                            "await guard `{}?` polls a value of type {}, not a future",
                            super::printer::print_expr(p),
                            show(&t)
                        )),
                    }
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if let Some(t) = self.expr(cond, scope, Mode::Code) {
                    self.expect_ty(&t, &Type::Bool, "condition");
                }
                self.block(then_branch, scope, ret);
                if let Some(e) = else_branch {
                    self.block(e, scope, ret);
                }
            }
            Stmt::While {
                cond,
                invariants,
                body,
            } => {
                if let Some(t) = self.expr(cond, scope, Mode::Code) {
                    self.expect_ty(&t, &Type::Bool, "loop condition");
                }
                for inv in invariants {
                    self.spec(inv, scope, Mode::Spec { result: false });
                }
                self.block(body, scope, ret);
            }
            Stmt::Return(r) => {
                let t = self.rhs(r, scope);
                match (ret, t) {
                    (Some(rt), Some(t)) => self.expect_ty(&t, rt, "return value"),
                    (None, _) => self.ty_error("return outside of a method".into()),
                    _ => {}
                }
            }
            Stmt::Skip => {}
            Stmt::Block(b) => self.block(b, scope, ret),
        }
    }

    fn args(&mut self, sig_params: &[Param], args: &[Expr], scope: &Scope, what: &str) {
        if sig_params.len() != args.len() {
            self.ty_error(format!(
                "{what} expects {} arguments, got {}",
                sig_params.len(),
                args.len()
            ));
            return;
        }
        for (p, a) in sig_params.iter().zip(args) {
            if let Some(t) = self.expr(a, scope, Mode::Code) {
                self.expect_ty(&t, &p.ty, &format!("argument `{}` of {what}", p.name));
            }
        }
    }

    fn rhs(&mut self, r: &Rhs, scope: &Scope) -> Option<Ty> {
        match r {
            Rhs::Expr(e) => self.expr(e, scope, Mode::Code),
            Rhs::AsyncCall {
                callee,
                method,
                args,
            }
            | Rhs::SyncCall {
                callee,
                method,
                args,
            } => {
                let ct = self.expr(callee, scope, Mode::Code)?;
                let Ty::T(Type::Named(tn)) = ct else {
                    self.ty_error(format!("call target has type {}, not an object", show(&ct)));
                    return None;
                };
                // Calls on `this` may use class-local methods.
                let sig = if matches!(callee, Expr::This) {
                    scope
                        .class
                        .and_then(|c| c.method(method))
                        .map(|m| &m.sig)
                        .or_else(|| self.m.method_sig(&tn, method))
                } else {
                    self.m.method_sig(&tn, method)
                };
                let Some(sig) = sig else {
                    self.error(
                        DiagnosticKind::UnknownIdentifier,
                        format!("`{tn}` has no method `{method}`"),
                    );
                    return None;
                };
                let sig = sig.clone();
                self.args(&sig.params, args, scope, &format!("`{method}`"));
                Some(Ty::T(if matches!(r, Rhs::AsyncCall { .. }) {
                    Type::fut(sig.ret)
                } else {
                    sig.ret
                }))
            }
            Rhs::Get(e) => match self.expr(e, scope, Mode::Code)? {
                Ty::T(Type::Fut(inner)) => Some(Ty::T(*inner)),
                t => {
                    self.ty_error(format!(
                        ".get on a value of type {}, not a future",
                        show(&t)
                    ));
                    None
                }
            },
            Rhs::New { class, args } => {
                let Some(c) = self.m.class(class) else {
                    self.error(
                        DiagnosticKind::UnknownIdentifier,
                        format!("unknown class `{class}`"),
                    );
                    return None;
                };
                self.args(&c.params, args, scope, &format!("`new {class}`"));
                Some(Ty::T(Type::Named(class.clone())))
            }
        }
    }

    fn compatible(&self, t: &Ty, want: &Type) -> bool {
        match (t, want) {
            (Ty::Null, Type::Named(_)) => true,
            (Ty::Null, _) => false,
            (Ty::T(Type::Named(a)), Type::Named(b)) => self.m.implements(a, b),
            (Ty::T(a), b) => a == b,
        }
    }

    fn expect_ty(&mut self, t: &Ty, want: &Type, what: &str) {
        if !self.compatible(t, want) {
            self.ty_error(format!("{what} has type {}, expected {want}", show(t)));
        }
    }

    fn expr(&mut self, e: &Expr, scope: &Scope, mode: Mode) -> Option<Ty> {
        use Type::*;
        Some(match e {
            Expr::Int(_) => Ty::T(Int),
            Expr::Bool(_) => Ty::T(Bool),
            Expr::Unit => Ty::T(Unit),
            Expr::Null => Ty::Null,
            Expr::This => match scope.class {
                Some(c) => Ty::T(Named(c.name.clone())),
                None => {
                    self.ty_error("`this` outside of a class".into());
                    return None;
                }
            },
            Expr::Var(v) => {
                if v == "result" {
                    if let Mode::Spec { result } = mode {
                        return match (&scope.result, result) {
                            (Some(t), true) => Some(Ty::T(t.clone())),
                            _ => {
                                self.error(
                                    DiagnosticKind::UnknownIdentifier,
                                    "`result` is only allowed in postconditions".into(),
                                );
                                None
                            }
                        };
                    }
                }
                match scope.lookup(v) {
                    Some(t) => Ty::T(t),
                    None => {
                        self.error(
                            DiagnosticKind::UnknownIdentifier,
                            format!("unknown identifier `{v}`"),
                        );
                        return None;
                    }
                }
            }
            Expr::Field(f) => match scope.class.and_then(|c| c.field_type(f)) {
                Some(t) if scope.fields => Ty::T(t.clone()),
                _ => {
                    self.error(
                        DiagnosticKind::UnknownIdentifier,
                        format!("unknown field `this.{f}`"),
                    );
                    return None;
                }
            },
            Expr::Unary(op, inner) => {
                let t = self.expr(inner, scope, mode)?;
                let want = match op {
                    UnOp::Not => Bool,
                    UnOp::Neg => Int,
                };
                self.expect_ty(&t, &want, "operand");
                Ty::T(want)
            }
            Expr::Binary(op, a, b) => {
                let ta = self.expr(a, scope, mode);
                let tb = self.expr(b, scope, mode);
                let (ta, tb) = (ta?, tb?);
                match op {
                    BinOp::And | BinOp::Or => {
                        self.expect_ty(&ta, &Bool, "operand");
                        self.expect_ty(&tb, &Bool, "operand");
                        Ty::T(Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let ok = match (&ta, &tb) {
                            (Ty::T(x), Ty::T(y)) => {
                                x == y
                                    || matches!((x, y), (Named(p), Named(q))
                                        if self.m.implements(p, q) || self.m.implements(q, p))
                            }
                            (Ty::Null, Ty::T(Named(_))) | (Ty::T(Named(_)), Ty::Null) => true,
                            (Ty::Null, Ty::Null) => true,
                            _ => false,
                        };
                        if !ok {
                            self.ty_error(format!(
                                "cannot compare {} with {}",
                                show(&ta),
                                show(&tb)
                            ));
                        }
                        Ty::T(Bool)
                    }
                    _ => {
                        self.expect_ty(&ta, &Int, "operand");
                        self.expect_ty(&tb, &Int, "operand");
                        Ty::T(if op.is_comparison() { Bool } else { Int })
                    }
                }
            }
            Expr::Cond(c, a, b) => {
                if let Some(tc) = self.expr(c, scope, mode) {
                    self.expect_ty(&tc, &Bool, "condition");
                }
                let ta = self.expr(a, scope, mode)?;
                let tb = self.expr(b, scope, mode)?;
                match (&ta, &tb) {
                    (Ty::T(x), _) if self.compatible(&tb, x) => ta,
                    (_, Ty::T(y)) if self.compatible(&ta, y) => tb,
                    _ => {
                        self.ty_error("branches of a conditional have different types".into());
                        return None;
                    }
                }
            }
            Expr::Apply(f, args) if f == "valueOf" => {
                if mode == Mode::Code {
                    self.ty_error("`valueOf` may only be used in specifications".into());
                    return None;
                }
                let [arg] = args.as_slice() else {
                    self.ty_error("`valueOf` takes one argument".into());
                    return None;
                };
                match self.expr(arg, scope, mode)? {
                    Ty::T(Fut(inner)) => Ty::T(*inner),
                    t => {
                        self.ty_error(format!("`valueOf` applied to {}, not a future", show(&t)));
                        return None;
                    }
                }
            }
            Expr::Apply(f, args) => {
                let Some(def) = self.m.function(f) else {
                    self.error(
                        DiagnosticKind::UnknownIdentifier,
                        format!("unknown function `{f}`"),
                    );
                    return None;
                };
                let def = def.clone();
                if def.params.len() != args.len() {
                    self.ty_error(format!(
                        "`{f}` expects {} arguments, got {}",
                        def.params.len(),
                        args.len()
                    ));
                } else {
                    for (p, a) in def.params.iter().zip(args) {
                        if let Some(t) = self.expr(a, scope, mode) {
                            self.expect_ty(&t, &p.ty, &format!("argument of `{f}`"));
                        }
                    }
                }
                Ty::T(def.ret)
            }
        })
    }
}

fn has_return(s: &Stmt) -> bool {
    match s {
        Stmt::Return(_) => true,
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => then_branch.iter().any(has_return) || else_branch.iter().flatten().any(has_return),
        Stmt::While { body, .. } | Stmt::Block(body) => body.iter().any(has_return),
        _ => false,
    }
}

fn show(t: &Ty) -> String {
    match t {
        Ty::T(t) => t.to_string(),
        Ty::Null => "null".into(),
    }
}
