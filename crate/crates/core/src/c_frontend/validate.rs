//! Checks that a parsed program lies inside the fragment the extractor handles.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::spec::{check_boolean, SpecScope};
use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

fn violation(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagnosticKind::SubsetViolation, pos, msg)
}

/// Names the extracted model uses itself, or that are keywords there.
const RESERVED: &[&str] = &[
    "result",
    "returnFlag",
    "funcResult",
    "global",
    "this",
    "valueOf",
    "unit",
    "null",
    "True",
    "False",
    "Int",
    "Bool",
    "Unit",
    "Fut",
    "module",
    "data",
    "def",
    "interface",
    "class",
    "implements",
    "extends",
    "new",
    "await",
    "then",
    "skip",
    "get",
    "local",
];

fn reserved(name: &str) -> bool {
    RESERVED.contains(&name)
        || name
            .strip_prefix("tmp_")
            .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Returns every reason the program falls outside the supported fragment.
/// An empty result means extraction is defined.
pub fn validate_subset(program: &CProgram) -> Vec<Diagnostic> {
    let mut v = Validator {
        program,
        diags: Vec::new(),
    };
    v.run();
    v.diags
}

/// Names assigned anywhere in a function body.
pub fn assigned_names(body: &[CStmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in body {
        collect_assigned_stmt(s, &mut out);
    }
    out
}

fn collect_assigned_stmt(s: &CStmt, out: &mut BTreeSet<String>) {
    match &s.kind {
        CStmtKind::Expr(e) => collect_assigned_expr(e, out),
        CStmtKind::Decl { init, .. } => {
            if let Some(e) = init {
                collect_assigned_expr(e, out)
            }
        }
        CStmtKind::Return(e) => {
            if let Some(e) = e {
                collect_assigned_expr(e, out)
            }
        }
        CStmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_assigned_expr(cond, out);
            collect_assigned_stmt(then_branch, out);
            if let Some(e) = else_branch {
                collect_assigned_stmt(e, out);
            }
        }
        CStmtKind::While { cond, body, .. } => {
            collect_assigned_expr(cond, out);
            collect_assigned_stmt(body, out);
        }
        CStmtKind::Compound(items) => items.iter().for_each(|s| collect_assigned_stmt(s, out)),
        CStmtKind::Empty => {}
    }
}

fn collect_assigned_expr(e: &CExpr, out: &mut BTreeSet<String>) {
    match &e.kind {
        CExprKind::Assign { target, value } => {
            out.insert(target.clone());
            collect_assigned_expr(value, out);
        }
        CExprKind::Binary { lhs, rhs, .. } | CExprKind::Logical { lhs, rhs, .. } => {
            collect_assigned_expr(lhs, out);
            collect_assigned_expr(rhs, out);
        }
        CExprKind::Call { args, .. } => args.iter().for_each(|a| collect_assigned_expr(a, out)),
        CExprKind::Unsupported { operands, .. } => {
            operands.iter().for_each(|a| collect_assigned_expr(a, out))
        }
        CExprKind::IntLit(_) | CExprKind::Var(_) => {}
    }
}

struct Validator<'a> {
    program: &'a CProgram,
    diags: Vec<Diagnostic>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Global,
    Param { is_const: bool },
    Local { is_const: bool },
}

struct FnScope {
    /// Innermost scope last.
    frames: Vec<HashMap<String, VarKind>>,
    declared: HashSet<String>,
    returns_int: bool,
}

impl FnScope {
    fn lookup(&self, name: &str) -> Option<VarKind> {
        self.frames.iter().rev().find_map(|f| f.get(name).copied())
    }
}

impl<'a> Validator<'a> {
    fn model_fns(&self) -> Vec<(String, usize)> {
        self.program
            .model_fn_defs
            .iter()
            .map(|d| (d.name.clone(), d.arity))
            .collect()
    }

    fn run(&mut self) {
        let program = self.program;
        let mut seen: HashMap<&str, Pos> = HashMap::new();
        for d in &program.model_fn_defs {
            if seen.insert(&d.name, d.loc.0).is_some() {
                self.diags.push(Diagnostic::error(
                    DiagnosticKind::Duplicate,
                    d.loc.0,
                    format!("model function `{}` defined twice", d.name),
                ));
            }
        }
        let mut names: HashSet<&str> = HashSet::new();
        for g in &program.globals {
            self.global(g, &mut names);
        }
        for f in &program.functions {
            if !names.insert(&f.name) {
                self.diags.push(Diagnostic::error(
                    DiagnosticKind::Duplicate,
                    f.loc.0,
                    format!("`{}` is declared more than once", f.name),
                ));
            }
        }
        for f in &program.functions {
            self.function(f);
        }
    }

    fn check_name(&mut self, name: &str, pos: Pos) {
        if reserved(name) {
            self.diags.push(violation(
                pos,
                format!("identifier `{name}` is reserved by the extracted model"),
            ));
        }
    }

    fn global(&mut self, g: &'a GlobalDecl, names: &mut HashSet<&'a str>) {
        let pos = g.loc.0;
        self.check_name(&g.name, pos);
        if !names.insert(&g.name) {
            self.diags.push(Diagnostic::error(
                DiagnosticKind::Duplicate,
                pos,
                format!("global `{}` is declared more than once", g.name),
            ));
        }
        self.check_type(&g.ty, pos, &g.name, false);
        if g.ty.is_const {
            self.diags.push(violation(
                pos,
                format!(
                    "const global `{}` is not supported; only non-const `int` globals",
                    g.name
                ),
            ));
        }
        if let Some(init) = &g.init {
            if !matches!(init.kind, CExprKind::IntLit(_)) {
                self.diags.push(violation(
                    init.pos(),
                    format!(
                        "initializer of global `{}` must be an integer literal",
                        g.name
                    ),
                ));
            }
        }
        if let Some(inv) = &g.strong_invariant {
            let others: Vec<String> = inv
                .variables()
                .into_iter()
                .filter(|v| *v != g.name)
                .collect();
            if !others.is_empty() {
                self.diags.push(violation(
                    pos,
                    format!(
                        "strong global invariant on `{}` also mentions `{}`; relational invariants are excluded, invariants must be about a single variable",
                        g.name,
                        others.join("`, `")
                    ),
                ));
            }
            let scope = SpecScope {
                variables: inv.variables().into_iter().collect(),
                functions: self.model_fns(),
                allow_result: false,
            };
            self.spec(inv, &scope, pos);
        }
    }

    fn check_type(&mut self, ty: &CType, pos: Pos, name: &str, allow_void: bool) {
        if ty.pointer_depth > 0 {
            self.diags.push(violation(
                pos,
                format!("pointer declaration `{name}` is not supported; pointers are outside the fragment"),
            ));
        } else if !ty.array_dims.is_empty() {
            self.diags.push(violation(
                pos,
                format!(
                    "array declaration `{name}` is not supported; arrays are outside the fragment"
                ),
            ));
        } else {
            match &ty.base {
                BaseType::Int => {}
                BaseType::Void if allow_void => {}
                BaseType::Void => self.diags.push(violation(
                    pos,
                    format!("`void` is not a valid type for `{name}`"),
                )),
                BaseType::Other(t) => self.diags.push(violation(
                    pos,
                    format!("type `{t}` of `{name}` is not supported; only `int` and `void`"),
                )),
            }
        }
    }

    fn spec(&mut self, e: &SpecExpr, scope: &SpecScope, pos: Pos) {
        if let Err(d) = scope.check(e, pos).and_then(|_| check_boolean(e, pos)) {
            self.diags.push(d);
        }
    }

    fn function(&mut self, f: &'a CFunction) {
        let pos = f.loc.0;
        self.check_name(&f.name, pos);
        self.check_type(&f.return_ty, pos, &f.name, true);
        if f.return_ty.is_const {
            self.diags
                .push(violation(pos, format!("const return type of `{}`", f.name)));
        }
        let mut params = HashMap::new();
        for p in &f.params {
            self.check_type(&p.ty, p.loc.0, &p.name, false);
            self.check_name(&p.name, p.loc.0);
            if self.program.global(&p.name).is_some() {
                self.diags.push(violation(
                    p.loc.0,
                    format!(
                        "parameter `{}` shadows a global; shadowing is not supported",
                        p.name
                    ),
                ));
            }
            if params
                .insert(
                    p.name.clone(),
                    VarKind::Param {
                        is_const: p.ty.is_const,
                    },
                )
                .is_some()
            {
                self.diags.push(Diagnostic::error(
                    DiagnosticKind::Duplicate,
                    p.loc.0,
                    format!("duplicate parameter `{}`", p.name),
                ));
            }
        }
        if let Some(c) = &f.contract {
            let mut vars: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
            vars.extend(self.program.globals.iter().map(|g| g.name.clone()));
            let mut scope = SpecScope {
                variables: vars,
                functions: self.model_fns(),
                allow_result: false,
            };
            for r in &c.requires {
                self.spec(r, &scope, pos);
            }
            scope.allow_result = f.returns_int();
            for e in &c.ensures {
                self.spec(e, &scope, pos);
            }
        }
        let mut globals = HashMap::new();
        for g in &self.program.globals {
            globals.insert(g.name.clone(), VarKind::Global);
        }
        let mut scope = FnScope {
            frames: vec![globals, params],
            declared: f.params.iter().map(|p| p.name.clone()).collect(),
            returns_int: f.returns_int(),
        };
        for s in &f.body {
            self.stmt(s, &mut scope);
        }
    }

    fn stmt(&mut self, s: &CStmt, scope: &mut FnScope) {
        let pos = s.loc.0;
        match &s.kind {
            CStmtKind::Expr(e) => self.expr(e, scope, true),
            CStmtKind::Decl { name, ty, init } => {
                self.check_type(ty, pos, name, false);
                self.check_name(name, pos);
                if let Some(e) = init {
                    self.expr(e, scope, false);
                } else if ty.is_const {
                    self.diags.push(violation(
                        pos,
                        format!("const local `{name}` needs an initializer"),
                    ));
                }
                if self.program.global(name).is_some() || !scope.declared.insert(name.clone()) {
                    self.diags.push(violation(
                        pos,
                        format!("local `{name}` reuses a name already declared in this function or globally; shadowing is not supported"),
                    ));
                }
                scope.frames.last_mut().expect("frame").insert(
                    name.clone(),
                    VarKind::Local {
                        is_const: ty.is_const,
                    },
                );
            }
            CStmtKind::Return(e) => match (e, scope.returns_int) {
                (Some(e), true) => self.expr(e, scope, false),
                (None, false) => {}
                (Some(_), false) => self
                    .diags
                    .push(violation(pos, "void function returns a value")),
                (None, true) => self
                    .diags
                    .push(violation(pos, "int function returns without a value")),
            },
            CStmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond, scope, false);
                self.nested(then_branch, scope);
                if let Some(e) = else_branch {
                    self.nested(e, scope);
                }
            }
            CStmtKind::While {
                cond,
                body,
                invariants,
            } => {
                self.expr(cond, scope, false);
                let mut vars = BTreeSet::new();
                for frame in &scope.frames[1..] {
                    vars.extend(frame.keys().cloned());
                }
                let spec_scope = SpecScope {
                    variables: vars,
                    functions: self.model_fns(),
                    allow_result: false,
                };
                for inv in invariants {
                    let globals: Vec<String> = inv
                        .variables()
                        .into_iter()
                        .filter(|v| scope.lookup(v) == Some(VarKind::Global))
                        .collect();
                    if !globals.is_empty() {
                        self.diags.push(violation(
                            pos,
                            format!(
                                "loop invariant mentions global `{}`; loop invariants may only mention parameters and locals",
                                globals[0]
                            ),
                        ));
                    } else {
                        self.spec(inv, &spec_scope, pos);
                    }
                }
                self.nested(body, scope);
            }
            CStmtKind::Compound(items) => {
                scope.frames.push(HashMap::new());
                for s in items {
                    self.stmt(s, scope);
                }
                scope.frames.pop();
            }
            CStmtKind::Empty => {}
        }
    }

    fn nested(&mut self, s: &CStmt, scope: &mut FnScope) {
        scope.frames.push(HashMap::new());
        self.stmt(s, scope);
        scope.frames.pop();
    }

    fn expr(&mut self, e: &CExpr, scope: &FnScope, void_ok: bool) {
        let pos = e.pos();
        match &e.kind {
            CExprKind::IntLit(_) => {}
            CExprKind::Var(name) => {
                if scope.lookup(name).is_none() {
                    let msg = if self.program.function(name).is_some() {
                        format!("function `{name}` used as a value")
                    } else {
                        format!("unknown identifier `{name}`")
                    };
                    self.diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownIdentifier,
                        pos,
                        msg,
                    ));
                }
            }
            CExprKind::Assign { target, value } => {
                match scope.lookup(target) {
                    None => self.diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownIdentifier,
                        pos,
                        format!("unknown identifier `{target}`"),
                    )),
                    Some(VarKind::Param { is_const: true })
                    | Some(VarKind::Local { is_const: true }) => self.diags.push(violation(
                        pos,
                        format!("assignment to const variable `{target}`"),
                    )),
                    _ => {}
                }
                self.expr(value, scope, false);
            }
            CExprKind::Binary { lhs, rhs, .. } | CExprKind::Logical { lhs, rhs, .. } => {
                self.expr(lhs, scope, false);
                self.expr(rhs, scope, false);
            }
            CExprKind::Call { name, args } => {
                match self.program.function(name) {
                    None => self.diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownIdentifier,
                        pos,
                        format!("call to undeclared function `{name}`"),
                    )),
                    Some(f) => {
                        if f.params.len() != args.len() {
                            self.diags.push(Diagnostic::error(
                                DiagnosticKind::Type,
                                pos,
                                format!(
                                    "`{name}` expects {} argument(s), got {}",
                                    f.params.len(),
                                    args.len()
                                ),
                            ));
                        }
                        if !f.returns_int() && !void_ok {
                            self.diags.push(Diagnostic::error(
                                DiagnosticKind::Type,
                                pos,
                                format!("value of void function `{name}` is used"),
                            ));
                        }
                    }
                }
                for a in args {
                    self.expr(a, scope, false);
                }
            }
            CExprKind::Unsupported {
                construct,
                operands,
            } => {
                let hint = match construct.as_str() {
                    "unary -" => "; write `0 - e` instead",
                    "," => "; the comma operator is outside the fragment",
                    _ => "",
                };
                self.diags.push(violation(
                    pos,
                    format!("`{construct}` is not supported{hint}"),
                ));
                for o in operands {
                    self.expr(o, scope, false);
                }
            }
        }
    }
}
