//! Translation of C declarations, statements and expressions into the
//! active-object model.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ExtractError;
use crate::abs_ir::{
    self, BinOp, Class, Expr, FieldDecl, Interface, Method, MethodSig, Param, Rhs, Stmt, Target,
    Type, UnOp,
};
use crate::c_frontend::ast::{
    self as c, CExpr, CExprKind, CFunction, CProgram, CStmt, CStmtKind, LogicOp,
};
use crate::c_frontend::validate::assigned_names;

/// Where the value of an evaluated sub-expression lives.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueRef {
    /// Known without running anything: literals, constant locals and
    /// parameters, and operators over these.
    CompileTimeVal(Expr),
    /// An already sequenced model local.
    LocalName(String),
    /// Result of an asynchronous self-call.
    FutureName(String),
}

impl ValueRef {
    fn is_future(&self) -> bool {
        matches!(self, ValueRef::FutureName(_))
    }

    /// The value as an expression, for values that need no synchronization.
    fn as_expr(&self) -> Option<Expr> {
        match self {
            ValueRef::CompileTimeVal(e) => Some(e.clone()),
            ValueRef::LocalName(n) => Some(Expr::Var(n.clone())),
            ValueRef::FutureName(_) => None,
        }
    }

    fn as_arg(&self) -> Expr {
        match self {
            ValueRef::FutureName(f) => Expr::Var(f.clone()),
            other => other.as_expr().expect("non-future value"),
        }
    }
}

#[derive(Debug, Clone)]
struct Eval {
    value: ValueRef,
    /// Side-effect futures not yet sequenced.
    effects: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarKind {
    /// Parameter or local kept as a model local and read directly.
    Direct,
    /// Non-const local or assigned parameter stored in a field.
    Field,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
enum Helper {
    GetGlobal(String),
    SetGlobal(String, bool),
    GetLocal(String),
    SetLocal(String, bool),
    Op(c::BinOp, bool, bool),
    Call {
        function: String,
        futs: Vec<bool>,
        effects: usize,
    },
}

fn kind_name(fut: bool) -> &'static str {
    if fut {
        "fut"
    } else {
        "val"
    }
}

pub(crate) fn call_helper_name(function: &str, futs: &[bool], effects: usize) -> String {
    let mut name = format!("call_{function}");
    for f in futs {
        name.push('_');
        name.push_str(kind_name(*f));
    }
    format!("{name}_{effects}")
}

pub(crate) fn op_helper_name(op: c::BinOp, a: bool, b: bool) -> String {
    format!("op_{}_{}_{}", op.helper_name(), kind_name(a), kind_name(b))
}

impl Helper {
    fn name(&self) -> String {
        match self {
            Helper::GetGlobal(x) => format!("get_global_{x}"),
            Helper::SetGlobal(x, fut) => format!("set_global_{x}_{}", kind_name(*fut)),
            Helper::GetLocal(v) => format!("get_local_{v}"),
            Helper::SetLocal(v, fut) => format!("set_local_{v}_{}", kind_name(*fut)),
            Helper::Op(op, a, b) => op_helper_name(*op, *a, *b),
            Helper::Call {
                function,
                futs,
                effects,
            } => call_helper_name(function, futs, *effects),
        }
    }
}

pub(crate) fn interface_name(f: &str) -> String {
    format!("I_{f}")
}

pub(crate) fn class_name(f: &str) -> String {
    format!("C_{f}")
}

fn var(n: &str) -> Expr {
    Expr::var(n)
}

fn fut_int() -> Type {
    Type::fut(Type::Int)
}

fn decl(ty: Type, name: &str, init: Rhs) -> Stmt {
    Stmt::VarDecl {
        ty,
        name: name.to_string(),
        init: Some(init),
    }
}

fn self_call(method: &str, args: Vec<Expr>) -> Rhs {
    Rhs::AsyncCall {
        callee: Expr::This,
        method: method.to_string(),
        args,
    }
}

fn global_field() -> Expr {
    Expr::Field("global".into())
}

fn int_to_bool(e: Expr) -> Expr {
    match e {
        Expr::Cond(c, a, b) if *a == Expr::Int(1) && *b == Expr::Int(0) => *c,
        other => Expr::bin(BinOp::Ne, other, Expr::Int(0)),
    }
}

fn bool_to_int(e: Expr) -> Expr {
    Expr::cond(e, Expr::Int(1), Expr::Int(0))
}

pub(crate) fn abs_binop(op: c::BinOp) -> BinOp {
    match op {
        c::BinOp::Add => BinOp::Add,
        c::BinOp::Sub => BinOp::Sub,
        c::BinOp::Mul => BinOp::Mul,
        c::BinOp::Div => BinOp::Div,
        c::BinOp::Lt => BinOp::Lt,
        c::BinOp::Gt => BinOp::Gt,
        c::BinOp::Le => BinOp::Le,
        c::BinOp::Ge => BinOp::Ge,
        c::BinOp::Eq => BinOp::Eq,
        c::BinOp::Ne => BinOp::Ne,
    }
}

/// The C operator applied to Int-valued operands, as an Int-valued
/// expression (comparisons yield 0 or 1).
pub(crate) fn apply_c_op(op: c::BinOp, a: Expr, b: Expr) -> Expr {
    let e = Expr::bin(abs_binop(op), a, b);
    if op.is_comparison() {
        bool_to_int(e)
    } else {
        e
    }
}

/// Shared by all functions of one program: the temporary counter runs
/// across the whole translation unit.
pub struct Translator<'p> {
    program: &'p CProgram,
    next_temp: usize,
}

impl<'p> Translator<'p> {
    pub fn new(program: &'p CProgram) -> Self {
        Translator {
            program,
            next_temp: 1,
        }
    }

    pub fn translate(mut self) -> Result<abs_ir::AbsModel, ExtractError> {
        let program = self.program;
        let mut m = abs_ir::AbsModel::empty("TestModule");
        m.data_decls.push(abs_ir::AbsModel::spec_data_decl());
        for d in &program.model_fn_defs {
            let f = abs_ir::parse_fundef(&d.text).map_err(|e| ExtractError::ModelFunction {
                name: d.name.clone(),
                message: e.message,
            })?;
            m.functions.push(f);
        }
        let (gi, gc) = global_object(program);
        m.interfaces.push(gi);
        m.classes.push(gc);
        for f in &program.functions {
            let (i, c) = self.function(f)?;
            m.interfaces.push(i);
            m.classes.push(c);
        }
        if let Some(main) = program.function("main") {
            m.main_block = main_block(main);
        }
        Ok(m)
    }

    fn function(&mut self, f: &CFunction) -> Result<(Interface, Class), ExtractError> {
        let assigned = assigned_names(&f.body);
        let mut vars = HashMap::new();
        for g in &self.program.globals {
            vars.insert(g.name.clone(), VarKind::Global);
        }
        let mut fields = Vec::new();
        let mut prologue = Vec::new();
        for p in &f.params {
            if !p.is_const() && assigned.contains(&p.name) {
                vars.insert(p.name.clone(), VarKind::Field);
                fields.push(p.name.clone());
                prologue.push(Stmt::Assign {
                    target: Target::Field(p.name.clone()),
                    value: Rhs::Expr(var(&p.name)),
                });
            } else {
                vars.insert(p.name.clone(), VarKind::Direct);
            }
        }
        let mut st = FnState {
            tr: self,
            function: f,
            assigned,
            vars,
            fields,
            helpers: Vec::new(),
            done: HashSet::new(),
            queue: Vec::new(),
        };
        let ret = if f.returns_int() {
            Type::Int
        } else {
            Type::Unit
        };
        let mut body = prologue;
        body.push(decl(Type::Bool, "returnFlag", Rhs::Expr(Expr::Bool(false))));
        if f.returns_int() {
            body.push(decl(Type::Int, "funcResult", Rhs::Expr(Expr::Int(0))));
        }
        let inner = st.block(&f.body)?;
        body.push(Stmt::Block(inner));
        if f.returns_int() {
            body.push(Stmt::Return(Rhs::Expr(var("funcResult"))));
        }
        let call = Method {
            sig: MethodSig {
                specs: Vec::new(),
                ret,
                name: "call".into(),
                params: f
                    .params
                    .iter()
                    .map(|p| Param::new(Type::Int, &p.name))
                    .collect(),
            },
            body,
        };
        let mut methods = vec![call];
        methods.extend(std::mem::take(&mut st.helpers));
        let fields = st
            .fields
            .iter()
            .map(|n| FieldDecl {
                ty: Type::Int,
                name: n.clone(),
                init: Some(Expr::Int(0)),
            })
            .collect();
        let iface = Interface {
            name: interface_name(&f.name),
            extends: Vec::new(),
            methods: methods.iter().map(|m| m.sig.clone()).collect(),
        };
        let class = Class {
            specs: Vec::new(),
            name: class_name(&f.name),
            params: vec![Param::new(Type::named("Global"), "global")],
            implements: vec![interface_name(&f.name)],
            fields,
            methods,
        };
        Ok((iface, class))
    }

    fn temp(&mut self) -> String {
        let t = format!("tmp_{}", self.next_temp);
        self.next_temp += 1;
        t
    }
}

fn global_object(program: &CProgram) -> (Interface, Class) {
    let mut sigs = Vec::new();
    let mut methods = Vec::new();
    for g in &program.globals {
        let get = MethodSig {
            specs: Vec::new(),
            ret: Type::Int,
            name: format!("get_{}", g.name),
            params: Vec::new(),
        };
        let set = MethodSig {
            specs: Vec::new(),
            ret: Type::Unit,
            name: format!("set_{}", g.name),
            params: vec![Param::new(Type::Int, "value")],
        };
        sigs.push(get.clone());
        sigs.push(set.clone());
        methods.push(Method {
            sig: get,
            body: vec![Stmt::Return(Rhs::Expr(Expr::Field(g.name.clone())))],
        });
        methods.push(Method {
            sig: set,
            body: vec![Stmt::Assign {
                target: Target::Field(g.name.clone()),
                value: Rhs::Expr(var("value")),
            }],
        });
    }
    let iface = Interface {
        name: "Global".into(),
        extends: Vec::new(),
        methods: sigs,
    };
    let class = Class {
        specs: Vec::new(),
        name: "Global".into(),
        params: Vec::new(),
        implements: vec!["Global".into()],
        fields: program
            .globals
            .iter()
            .map(|g| FieldDecl {
                ty: Type::Int,
                name: g.name.clone(),
                init: Some(Expr::Int(g.initial())),
            })
            .collect(),
        methods,
    };
    (iface, class)
}

fn main_block(main: &CFunction) -> Vec<Stmt> {
    let ret = if main.returns_int() {
        Type::Int
    } else {
        Type::Unit
    };
    vec![
        decl(
            Type::named("Global"),
            "global",
            Rhs::New {
                class: "Global".into(),
                args: Vec::new(),
            },
        ),
        decl(
            Type::named(&interface_name("main")),
            "main",
            Rhs::New {
                class: class_name("main"),
                args: vec![var("global")],
            },
        ),
        decl(
            Type::fut(ret),
            "fut",
            Rhs::AsyncCall {
                callee: var("main"),
                method: "call".into(),
                args: main.params.iter().map(|_| Expr::Int(0)).collect(),
            },
        ),
        Stmt::Await(vec![var("fut")]),
    ]
}

struct FnState<'a, 'p> {
    tr: &'a mut Translator<'p>,
    function: &'a CFunction,
    assigned: BTreeSet<String>,
    vars: HashMap<String, VarKind>,
    fields: Vec<String>,
    helpers: Vec<Method>,
    done: HashSet<String>,
    queue: Vec<Helper>,
}

fn stmt_may_return(s: &CStmt) -> bool {
    match &s.kind {
        CStmtKind::Return(_) => true,
        CStmtKind::If {
            then_branch,
            else_branch,
            ..
        } => stmt_may_return(then_branch) || else_branch.as_deref().is_some_and(stmt_may_return),
        CStmtKind::While { body, .. } => stmt_may_return(body),
        CStmtKind::Compound(b) => b.iter().any(stmt_may_return),
        _ => false,
    }
}

fn not_returned() -> Expr {
    Expr::Unary(UnOp::Not, Box::new(var("returnFlag")))
}

impl FnState<'_, '_> {
    fn temp(&mut self) -> String {
        self.tr.temp()
    }

    fn internal(&self, msg: &str) -> ExtractError {
        ExtractError::Internal(format!("{}: {msg}", self.function.name))
    }

    fn block(&mut self, stmts: &[CStmt]) -> Result<Vec<Stmt>, ExtractError> {
        let mut out = Vec::new();
        for (k, s) in stmts.iter().enumerate() {
            self.stmt(s, &mut out)?;
            let rest = &stmts[k + 1..];
            if stmt_may_return(s) && !rest.is_empty() {
                let guarded = self.block(rest)?;
                out.push(Stmt::If {
                    cond: not_returned(),
                    then_branch: guarded,
                    else_branch: None,
                });
                break;
            }
        }
        Ok(out)
    }

    fn branch(&mut self, s: &CStmt) -> Result<Vec<Stmt>, ExtractError> {
        match &s.kind {
            CStmtKind::Compound(b) => self.block(b),
            _ => self.block(std::slice::from_ref(s)),
        }
    }

    fn stmt(&mut self, s: &CStmt, out: &mut Vec<Stmt>) -> Result<(), ExtractError> {
        match &s.kind {
            CStmtKind::Empty => {}
            CStmtKind::Compound(b) => {
                let inner = self.block(b)?;
                out.push(Stmt::Block(inner));
            }
            CStmtKind::Expr(e) => {
                let ev = self.full_expr(e, out)?;
                self.sequence(&ev, out);
            }
            CStmtKind::Decl { name, ty, init } => {
                if ty.is_const || !self.assigned.contains(name) {
                    self.vars.insert(name.clone(), VarKind::Direct);
                    let init = init
                        .as_ref()
                        .ok_or_else(|| self.internal("constant local without initializer"))?;
                    let value = self.value_expr(init, out)?;
                    out.push(decl(Type::Int, name, value));
                } else {
                    self.vars.insert(name.clone(), VarKind::Field);
                    if !self.fields.contains(name) {
                        self.fields.push(name.clone());
                    }
                    if let Some(init) = init {
                        let assign = CExpr::new(
                            CExprKind::Assign {
                                target: name.clone(),
                                value: Box::new(init.clone()),
                            },
                            init.pos(),
                        );
                        let ev = self.full_expr(&assign, out)?;
                        self.sequence(&ev, out);
                    }
                }
            }
            CStmtKind::Return(e) => {
                if let Some(e) = e {
                    let value = self.value_expr(e, out)?;
                    out.push(Stmt::Assign {
                        target: Target::Var("funcResult".into()),
                        value,
                    });
                }
                out.push(Stmt::Assign {
                    target: Target::Var("returnFlag".into()),
                    value: Rhs::Expr(Expr::Bool(true)),
                });
            }
            CStmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let flag = self.condition(cond, out)?;
                let then_branch = self.branch(then_branch)?;
                let else_branch = match else_branch {
                    Some(e) => Some(self.branch(e)?),
                    None => None,
                };
                out.push(Stmt::If {
                    cond: int_to_bool(var(&flag)),
                    then_branch,
                    else_branch,
                });
            }
            CStmtKind::While {
                cond,
                body,
                invariants,
            } => {
                let flag = self.condition(cond, out)?;
                let mut inner = self.branch(body)?;
                let mut again = Vec::new();
                let next = self.condition(cond, &mut again)?;
                again.push(Stmt::Assign {
                    target: Target::Var(flag.clone()),
                    value: Rhs::Expr(var(&next)),
                });
                if stmt_may_return(body) {
                    inner.push(Stmt::If {
                        cond: not_returned(),
                        then_branch: again,
                        else_branch: Some(vec![Stmt::Assign {
                            target: Target::Var(flag.clone()),
                            value: Rhs::Expr(Expr::Int(0)),
                        }]),
                    });
                } else {
                    inner.extend(again);
                }
                let invariants = invariants
                    .iter()
                    .map(|i| {
                        super::specs::translate_spec(i, &|v| match self.vars.get(v) {
                            Some(VarKind::Field) => Some(Expr::Field(v.to_string())),
                            _ => None,
                        })
                    })
                    .collect();
                out.push(Stmt::While {
                    cond: int_to_bool(var(&flag)),
                    invariants,
                    body: inner,
                });
            }
        }
        Ok(())
    }

    /// Evaluates a full expression up to its sequence point and returns a
    /// right-hand side reading its value.
    fn value_expr(&mut self, e: &CExpr, out: &mut Vec<Stmt>) -> Result<Rhs, ExtractError> {
        let ev = self.full_expr(e, out)?;
        self.sequence(&ev, out);
        Ok(match &ev.value {
            ValueRef::FutureName(f) => Rhs::Get(var(f)),
            other => Rhs::Expr(other.as_expr().expect("non-future")),
        })
    }

    /// Evaluates a controlling expression into a fresh Int local.
    fn condition(&mut self, e: &CExpr, out: &mut Vec<Stmt>) -> Result<String, ExtractError> {
        let rhs = self.value_expr(e, out)?;
        let t = self.temp();
        out.push(decl(Type::Int, &t, rhs));
        Ok(t)
    }

    /// Synchronizes on the value future and all pending side effects.
    fn sequence(&mut self, ev: &Eval, out: &mut Vec<Stmt>) {
        let mut polls = Vec::new();
        if let ValueRef::FutureName(f) = &ev.value {
            polls.push(var(f));
        }
        polls.extend(ev.effects.iter().map(|e| var(e)));
        if !polls.is_empty() {
            out.push(Stmt::Await(polls));
        }
    }

    fn full_expr(&mut self, e: &CExpr, out: &mut Vec<Stmt>) -> Result<Eval, ExtractError> {
        let e = self.hoist_logical(e, out)?;
        let ev = self.expr(&e, out)?;
        self.flush_helpers()?;
        Ok(ev)
    }

    fn is_compile_time(&self, e: &CExpr) -> bool {
        match &e.kind {
            CExprKind::IntLit(_) => true,
            CExprKind::Var(v) => self.vars.get(v) == Some(&VarKind::Direct),
            CExprKind::Binary { lhs, rhs, .. } | CExprKind::Logical { lhs, rhs, .. } => {
                self.is_compile_time(lhs) && self.is_compile_time(rhs)
            }
            _ => false,
        }
    }

    /// Replaces short-circuit operators whose operands need evaluation by a
    /// local computed with explicit conditionals beforehand.
    fn hoist_logical(&mut self, e: &CExpr, out: &mut Vec<Stmt>) -> Result<CExpr, ExtractError> {
        let pos = e.pos();
        Ok(match &e.kind {
            CExprKind::Logical { op, lhs, rhs } if !self.is_compile_time(e) => {
                let t = self.temp();
                out.push(decl(Type::Int, &t, Rhs::Expr(Expr::Int(0))));
                let l = self.condition(lhs, out)?;
                let mut rhs_stmts = Vec::new();
                let r = self.condition(rhs, &mut rhs_stmts)?;
                rhs_stmts.push(Stmt::Assign {
                    target: Target::Var(t.clone()),
                    value: Rhs::Expr(bool_to_int(int_to_bool(var(&r)))),
                });
                let set_one = vec![Stmt::Assign {
                    target: Target::Var(t.clone()),
                    value: Rhs::Expr(Expr::Int(1)),
                }];
                let (then_branch, else_branch) = match op {
                    LogicOp::And => (rhs_stmts, None),
                    LogicOp::Or => (set_one, Some(rhs_stmts)),
                };
                out.push(Stmt::If {
                    cond: int_to_bool(var(&l)),
                    then_branch,
                    else_branch,
                });
                self.vars.insert(t.clone(), VarKind::Direct);
                CExpr::new(CExprKind::Var(t), pos)
            }
            CExprKind::Logical { .. } | CExprKind::IntLit(_) | CExprKind::Var(_) => e.clone(),
            CExprKind::Assign { target, value } => CExpr::new(
                CExprKind::Assign {
                    target: target.clone(),
                    value: Box::new(self.hoist_logical(value, out)?),
                },
                pos,
            ),
            CExprKind::Binary { op, lhs, rhs } => {
                let lhs = self.hoist_logical(lhs, out)?;
                let rhs = self.hoist_logical(rhs, out)?;
                CExpr::new(
                    CExprKind::Binary {
                        op: *op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    pos,
                )
            }
            CExprKind::Call { name, args } => {
                let mut new_args = Vec::new();
                for a in args {
                    new_args.push(self.hoist_logical(a, out)?);
                }
                CExpr::new(
                    CExprKind::Call {
                        name: name.clone(),
                        args: new_args,
                    },
                    pos,
                )
            }
            CExprKind::Unsupported { construct, .. } => {
                return Err(self.internal(&format!("unsupported construct `{construct}`")))
            }
        })
    }

    fn request(&mut self, h: Helper) -> String {
        let name = h.name();
        if !self.done.contains(&name) && !self.queue.iter().any(|q| q.name() == name) {
            self.queue.push(h);
        }
        name
    }

    fn emit_future(
        &mut self,
        ty: Type,
        method: &str,
        args: Vec<Expr>,
        out: &mut Vec<Stmt>,
    ) -> String {
        let t = self.temp();
        out.push(decl(ty, &t, self_call(method, args)));
        t
    }

    fn expr(&mut self, e: &CExpr, out: &mut Vec<Stmt>) -> Result<Eval, ExtractError> {
        let pure = |value| Eval {
            value,
            effects: Vec::new(),
        };
        match &e.kind {
            CExprKind::IntLit(v) => Ok(pure(ValueRef::CompileTimeVal(Expr::Int(*v)))),
            CExprKind::Var(v) => match self.vars.get(v).copied() {
                Some(VarKind::Direct) => Ok(pure(if v.starts_with("tmp_") {
                    ValueRef::LocalName(v.clone())
                } else {
                    ValueRef::CompileTimeVal(var(v))
                })),
                Some(VarKind::Global) => {
                    let m = self.request(Helper::GetGlobal(v.clone()));
                    let t = self.emit_future(fut_int(), &m, Vec::new(), out);
                    Ok(pure(ValueRef::FutureName(t)))
                }
                Some(VarKind::Field) => {
                    let m = self.request(Helper::GetLocal(v.clone()));
                    let t = self.emit_future(fut_int(), &m, Vec::new(), out);
                    Ok(pure(ValueRef::FutureName(t)))
                }
                None => Err(self.internal(&format!("unknown variable `{v}`"))),
            },
            CExprKind::Assign { target, value } => {
                let mut ev = self.expr(value, out)?;
                let fut = ev.value.is_future();
                let helper = match self.vars.get(target).copied() {
                    Some(VarKind::Global) => Helper::SetGlobal(target.clone(), fut),
                    Some(VarKind::Field) => Helper::SetLocal(target.clone(), fut),
                    _ => return Err(self.internal(&format!("assignment to constant `{target}`"))),
                };
                let m = self.request(helper);
                // One temporary is reserved for the assignment's own value.
                let _ = self.temp();
                let s = self.emit_future(Type::fut(Type::Unit), &m, vec![ev.value.as_arg()], out);
                ev.effects.push(s);
                Ok(ev)
            }
            CExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, out)?;
                let r = self.expr(rhs, out)?;
                let mut effects = l.effects;
                effects.extend(r.effects);
                let value = match (l.value.as_expr(), r.value.as_expr()) {
                    (Some(a), Some(b)) => ValueRef::CompileTimeVal(apply_c_op(*op, a, b)),
                    _ => {
                        let m =
                            self.request(Helper::Op(*op, l.value.is_future(), r.value.is_future()));
                        let args = vec![l.value.as_arg(), r.value.as_arg()];
                        ValueRef::FutureName(self.emit_future(fut_int(), &m, args, out))
                    }
                };
                Ok(Eval { value, effects })
            }
            CExprKind::Logical { op, lhs, rhs } => {
                let l = self.expr(lhs, out)?;
                let r = self.expr(rhs, out)?;
                match (l.value.as_expr(), r.value.as_expr()) {
                    (Some(a), Some(b)) if l.effects.is_empty() && r.effects.is_empty() => {
                        let op = match op {
                            LogicOp::And => BinOp::And,
                            LogicOp::Or => BinOp::Or,
                        };
                        Ok(pure(ValueRef::CompileTimeVal(bool_to_int(Expr::bin(
                            op,
                            int_to_bool(a),
                            int_to_bool(b),
                        )))))
                    }
                    _ => Err(self.internal("short-circuit operator was not desugared")),
                }
            }
            CExprKind::Call { name, args } => {
                let callee = self
                    .tr
                    .program
                    .function(name)
                    .ok_or_else(|| self.internal(&format!("unknown function `{name}`")))?;
                let returns_int = callee.returns_int();
                let mut values = Vec::new();
                let mut effects = Vec::new();
                for a in args {
                    let ev = self.expr(a, out)?;
                    values.push(ev.value);
                    effects.extend(ev.effects);
                }
                let futs: Vec<bool> = values.iter().map(ValueRef::is_future).collect();
                let m = self.request(Helper::Call {
                    function: name.clone(),
                    futs,
                    effects: effects.len(),
                });
                let mut call_args: Vec<Expr> = values.iter().map(ValueRef::as_arg).collect();
                call_args.extend(effects.iter().map(|e| var(e)));
                let ty = Type::fut(if returns_int { Type::Int } else { Type::Unit });
                let t = self.emit_future(ty, &m, call_args, out);
                Ok(Eval {
                    value: ValueRef::FutureName(t),
                    effects: Vec::new(),
                })
            }
            CExprKind::Unsupported { construct, .. } => {
                Err(self.internal(&format!("unsupported construct `{construct}`")))
            }
        }
    }

    fn flush_helpers(&mut self) -> Result<(), ExtractError> {
        while !self.queue.is_empty() {
            let h = self.queue.remove(0);
            let name = h.name();
            if self.done.insert(name.clone()) {
                let m = self.helper(&h, name)?;
                self.helpers.push(m);
            }
        }
        Ok(())
    }

    fn helper(&mut self, h: &Helper, name: String) -> Result<Method, ExtractError> {
        let sig = |ret: Type, params: Vec<Param>| MethodSig {
            specs: Vec::new(),
            ret,
            name: name.clone(),
            params,
        };
        let unit_fut = Type::fut(Type::Unit);
        Ok(match h {
            Helper::GetGlobal(x) => Method {
                sig: sig(Type::Int, Vec::new()),
                body: vec![
                    decl(
                        fut_int(),
                        "futureResult",
                        Rhs::AsyncCall {
                            callee: global_field(),
                            method: format!("get_{x}"),
                            args: Vec::new(),
                        },
                    ),
                    decl(Type::Int, "funcResult", Rhs::Get(var("futureResult"))),
                    Stmt::Return(Rhs::Expr(var("funcResult"))),
                ],
            },
            Helper::SetGlobal(x, fut) => {
                let (params, mut body) = value_param(*fut);
                body.push(decl(
                    unit_fut,
                    "futureResult",
                    Rhs::AsyncCall {
                        callee: global_field(),
                        method: format!("set_{x}"),
                        args: vec![var("value")],
                    },
                ));
                body.push(Stmt::Rhs(Rhs::Get(var("futureResult"))));
                Method {
                    sig: sig(Type::Unit, params),
                    body,
                }
            }
            Helper::GetLocal(v) => Method {
                sig: sig(Type::Int, Vec::new()),
                body: vec![Stmt::Return(Rhs::Expr(Expr::Field(v.clone())))],
            },
            Helper::SetLocal(v, fut) => {
                let (params, mut body) = value_param(*fut);
                body.push(Stmt::Assign {
                    target: Target::Field(v.clone()),
                    value: Rhs::Expr(var("value")),
                });
                Method {
                    sig: sig(Type::Unit, params),
                    body,
                }
            }
            Helper::Op(op, a, b) => {
                let (params, mut body) = operand_params(&[*a, *b], 0);
                body.push(Stmt::Return(Rhs::Expr(apply_c_op(
                    *op,
                    var("arg1"),
                    var("arg2"),
                ))));
                Method {
                    sig: sig(Type::Int, params),
                    body,
                }
            }
            Helper::Call {
                function,
                futs,
                effects,
            } => {
                let callee = self
                    .tr
                    .program
                    .function(function)
                    .ok_or_else(|| self.internal(&format!("unknown function `{function}`")))?;
                let returns_int = callee.returns_int();
                let (params, mut body) = operand_params(futs, *effects);
                let obj = self.temp();
                let fut = self.temp();
                body.push(decl(
                    Type::named(&interface_name(function)),
                    &obj,
                    Rhs::New {
                        class: class_name(function),
                        args: vec![global_field()],
                    },
                ));
                let args = (1..=futs.len()).map(|k| var(&format!("arg{k}"))).collect();
                let ret = if returns_int { Type::Int } else { Type::Unit };
                body.push(decl(
                    Type::fut(ret.clone()),
                    &fut,
                    Rhs::AsyncCall {
                        callee: var(&obj),
                        method: "call".into(),
                        args,
                    },
                ));
                let res = self.temp();
                body.push(decl(ret.clone(), &res, Rhs::Get(var(&fut))));
                if returns_int {
                    body.push(Stmt::Return(Rhs::Expr(var(&res))));
                }
                Method {
                    sig: sig(ret, params),
                    body,
                }
            }
        })
    }
}

/// Parameter list and prologue of setter helpers.
fn value_param(fut: bool) -> (Vec<Param>, Vec<Stmt>) {
    if fut {
        (
            vec![Param::new(fut_int(), "fut_value")],
            vec![
                Stmt::Await(vec![var("fut_value")]),
                decl(Type::Int, "value", Rhs::Get(var("fut_value"))),
            ],
        )
    } else {
        (vec![Param::new(Type::Int, "value")], Vec::new())
    }
}

/// Parameters `arg<i>`/`fut_arg<i>` plus side-effect futures, and the
/// prologue awaiting all of them and reading the future operands.
fn operand_params(futs: &[bool], effects: usize) -> (Vec<Param>, Vec<Stmt>) {
    let mut params = Vec::new();
    let mut polls = Vec::new();
    let mut reads = Vec::new();
    for (k, fut) in futs.iter().enumerate() {
        let i = k + 1;
        if *fut {
            let name = format!("fut_arg{i}");
            params.push(Param::new(fut_int(), &name));
            polls.push(var(&name));
            reads.push(decl(Type::Int, &format!("arg{i}"), Rhs::Get(var(&name))));
        } else {
            params.push(Param::new(Type::Int, &format!("arg{i}")));
        }
    }
    for j in 1..=effects {
        let name = format!("side_effect{j}");
        params.push(Param::new(Type::fut(Type::Unit), &name));
        polls.push(var(&name));
    }
    let mut body = Vec::new();
    if !polls.is_empty() {
        body.push(Stmt::Await(polls));
    }
    body.extend(reads);
    (params, body)
}
