//! Specification synthesis over an extracted model.

use crate::abs_ir::{AbsModel, BinOp, Expr, MethodSig, Spec, SpecKind, UnOp};
use crate::c_frontend::ast::{CProgram, SpecBinOp, SpecExpr};

use super::translate::{abs_binop, apply_c_op, call_helper_name, interface_name};
use super::ExtractError;

/// Translates an ACSL expression; `map` may replace variables.
pub fn translate_spec(e: &SpecExpr, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
    match e {
        SpecExpr::Int(v) => Expr::Int(*v),
        SpecExpr::Bool(b) => Expr::Bool(*b),
        SpecExpr::Var(v) => map(v).unwrap_or_else(|| Expr::var(v)),
        SpecExpr::Result => Expr::var("result"),
        SpecExpr::Not(inner) => Expr::Unary(UnOp::Not, Box::new(translate_spec(inner, map))),
        SpecExpr::Binary { op, lhs, rhs } => {
            let a = translate_spec(lhs, map);
            let b = translate_spec(rhs, map);
            match op {
                SpecBinOp::Arith(op) => Expr::bin(abs_binop(*op), a, b),
                SpecBinOp::And => Expr::bin(BinOp::And, a, b),
                SpecBinOp::Or => Expr::bin(BinOp::Or, a, b),
                SpecBinOp::Implies => Expr::bin(BinOp::Or, Expr::not(a), b),
            }
        }
        SpecExpr::Call { name, args } => Expr::Apply(
            name.clone(),
            args.iter().map(|a| translate_spec(a, map)).collect(),
        ),
    }
}

fn add_spec(sig: &mut MethodSig, spec: Spec) {
    if sig.specs.contains(&spec) {
        return;
    }
    if spec.kind == SpecKind::Requires {
        let at = sig
            .specs
            .iter()
            .position(|s| s.kind != SpecKind::Requires)
            .unwrap_or(sig.specs.len());
        sig.specs.insert(at, spec);
    } else {
        sig.specs.push(spec);
    }
}

fn is_function_class(c: &crate::abs_ir::Class) -> bool {
    c.name.starts_with("C_")
        && c.params.len() == 1
        && c.params[0].name == "global"
        && c.params[0].ty == crate::abs_ir::Type::named("Global")
}

/// Every function-modeling class gets `global != null` as creation
/// condition and object invariant.
pub fn synthesize_global_object_specs(mut m: AbsModel) -> AbsModel {
    let not_null = Expr::bin(BinOp::Ne, Expr::Field("global".into()), Expr::Null);
    for c in m.classes.iter_mut().filter(|c| is_function_class(c)) {
        for kind in [SpecKind::Requires, SpecKind::ObjInv] {
            let s = Spec::new(kind, not_null.clone());
            if !c.specs.contains(&s) {
                c.specs.push(s);
            }
        }
    }
    m
}

/// Parses `op_<name>_<kind>_<kind>` helper names.
fn parse_op_helper(name: &str) -> Option<(crate::c_frontend::ast::BinOp, bool, bool)> {
    use crate::c_frontend::ast::BinOp as C;
    let rest = name.strip_prefix("op_")?;
    let mut parts = rest.split('_');
    let (op, a, b) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let op = [
        C::Add,
        C::Sub,
        C::Mul,
        C::Div,
        C::Lt,
        C::Gt,
        C::Le,
        C::Ge,
        C::Eq,
        C::Ne,
    ]
    .into_iter()
    .find(|o| o.helper_name() == op)?;
    let kind = |k: &str| match k {
        "val" => Some(false),
        "fut" => Some(true),
        _ => None,
    };
    Some((op, kind(a)?, kind(b)?))
}

fn operand(i: usize, fut: bool) -> Expr {
    if fut {
        Expr::value_of(&format!("fut_arg{i}"))
    } else {
        Expr::var(&format!("arg{i}"))
    }
}

/// Operator helpers declared in interfaces get their exact postcondition.
pub fn synthesize_operator_postconditions(mut m: AbsModel) -> AbsModel {
    for i in &mut m.interfaces {
        for sig in &mut i.methods {
            if let Some((op, a, b)) = parse_op_helper(&sig.name) {
                let post = Expr::bin(
                    BinOp::Eq,
                    Expr::var("result"),
                    apply_c_op(op, operand(1, a), operand(2, b)),
                );
                add_spec(sig, Spec::new(SpecKind::Ensures, post));
            }
        }
    }
    m
}

/// Argument kinds of a `call_<f>_...` helper for function `f` of arity `n`.
fn parse_call_helper(name: &str, f: &str, arity: usize) -> Option<Vec<bool>> {
    let rest = name.strip_prefix(&format!("call_{f}_"))?;
    let parts: Vec<&str> = rest.split('_').collect();
    let (count, kinds) = parts.split_last()?;
    if kinds.len() != arity || count.is_empty() || !count.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let futs = kinds
        .iter()
        .map(|k| match *k {
            "val" => Some(false),
            "fut" => Some(true),
            _ => None,
        })
        .collect::<Option<Vec<bool>>>()?;
    let effects: usize = count.parse().ok()?;
    (call_helper_name(f, &futs, effects) == name).then_some(futs)
}

/// Function contracts become contracts of `call` and of every indirect
/// call helper, with future arguments read through `valueOf`.
pub fn translate_function_contracts(
    mut m: AbsModel,
    program: &CProgram,
) -> Result<AbsModel, ExtractError> {
    for f in &program.functions {
        let Some(contract) = &f.contract else {
            continue;
        };
        for e in contract.requires.iter().chain(&contract.ensures) {
            if let Some(g) = e
                .variables()
                .into_iter()
                .find(|v| program.global(v).is_some())
            {
                return Err(ExtractError::ContractTranslation {
                    function: f.name.clone(),
                    global: g,
                });
            }
        }
        let params: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
        let annotate = |sig: &mut MethodSig, map: &dyn Fn(&str) -> Option<Expr>| {
            for r in &contract.requires {
                add_spec(sig, Spec::new(SpecKind::Requires, translate_spec(r, map)));
            }
            for e in &contract.ensures {
                add_spec(sig, Spec::new(SpecKind::Ensures, translate_spec(e, map)));
            }
        };
        let own = interface_name(&f.name);
        for i in &mut m.interfaces {
            for sig in &mut i.methods {
                if i.name == own && sig.name == "call" {
                    annotate(sig, &|_| None);
                } else if let Some(futs) = parse_call_helper(&sig.name, &f.name, params.len()) {
                    let map = |v: &str| {
                        params
                            .iter()
                            .position(|p| *p == v)
                            .map(|k| operand(k + 1, futs[k]))
                    };
                    annotate(sig, &map);
                }
            }
        }
    }
    Ok(m)
}

/// Evaluates a closed invariant instance; `None` when it applies model
/// functions or divides by zero.
fn eval_spec(e: &SpecExpr, x: &str, value: i64) -> Option<SpecVal> {
    use crate::c_frontend::ast::BinOp as C;
    Some(match e {
        SpecExpr::Int(v) => SpecVal::Int(*v),
        SpecExpr::Bool(b) => SpecVal::Bool(*b),
        SpecExpr::Var(v) if v == x => SpecVal::Int(value),
        SpecExpr::Not(inner) => SpecVal::Bool(!eval_spec(inner, x, value)?.as_bool()?),
        SpecExpr::Binary { op, lhs, rhs } => {
            let a = eval_spec(lhs, x, value)?;
            let b = eval_spec(rhs, x, value)?;
            match op {
                SpecBinOp::And => SpecVal::Bool(a.as_bool()? && b.as_bool()?),
                SpecBinOp::Or => SpecVal::Bool(a.as_bool()? || b.as_bool()?),
                SpecBinOp::Implies => SpecVal::Bool(!a.as_bool()? || b.as_bool()?),
                SpecBinOp::Arith(op) => {
                    if let (SpecVal::Bool(p), SpecVal::Bool(q)) = (a, b) {
                        return match op {
                            C::Eq => Some(SpecVal::Bool(p == q)),
                            C::Ne => Some(SpecVal::Bool(p != q)),
                            _ => None,
                        };
                    }
                    let (p, q) = (a.as_int()?, b.as_int()?);
                    match op {
                        C::Add => SpecVal::Int(p.checked_add(q)?),
                        C::Sub => SpecVal::Int(p.checked_sub(q)?),
                        C::Mul => SpecVal::Int(p.checked_mul(q)?),
                        C::Div => SpecVal::Int(p.checked_div(q)?),
                        C::Lt => SpecVal::Bool(p < q),
                        C::Gt => SpecVal::Bool(p > q),
                        C::Le => SpecVal::Bool(p <= q),
                        C::Ge => SpecVal::Bool(p >= q),
                        C::Eq => SpecVal::Bool(p == q),
                        C::Ne => SpecVal::Bool(p != q),
                    }
                }
            }
        }
        _ => return None,
    })
}

#[derive(Clone, Copy)]
enum SpecVal {
    Int(i64),
    Bool(bool),
}

impl SpecVal {
    fn as_bool(self) -> Option<bool> {
        match self {
            SpecVal::Bool(b) => Some(b),
            SpecVal::Int(_) => None,
        }
    }

    fn as_int(self) -> Option<i64> {
        match self {
            SpecVal::Int(v) => Some(v),
            SpecVal::Bool(_) => None,
        }
    }
}

/// Strong invariants become the object invariant of `Global`, a
/// precondition of every setter and a postcondition of every getter.
pub fn translate_strong_global_invariants(
    mut m: AbsModel,
    program: &CProgram,
) -> Result<AbsModel, ExtractError> {
    for g in &program.globals {
        let Some(inv) = &g.strong_invariant else {
            continue;
        };
        if let Some(SpecVal::Bool(false)) = eval_spec(inv, &g.name, g.initial()) {
            return Err(ExtractError::Invariant {
                global: g.name.clone(),
                initial: g.initial(),
            });
        }
        let inst = |e: Expr| translate_spec(inv, &|v| (v == g.name).then(|| e.clone()));
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == "Global") {
            let s = Spec::new(SpecKind::ObjInv, inst(Expr::Field(g.name.clone())));
            if !c.specs.contains(&s) {
                c.specs.push(s);
            }
        }
        let get_global = format!("get_global_{}", g.name);
        let set_val = format!("set_global_{}_val", g.name);
        let set_fut = format!("set_global_{}_fut", g.name);
        for i in &mut m.interfaces {
            let is_global = i.name == "Global";
            for sig in &mut i.methods {
                let n = sig.name.as_str();
                if (is_global && n == format!("get_{}", g.name)) || n == get_global {
                    add_spec(sig, Spec::new(SpecKind::Ensures, inst(Expr::var("result"))));
                } else if (is_global && n == format!("set_{}", g.name)) || n == set_val {
                    add_spec(sig, Spec::new(SpecKind::Requires, inst(Expr::var("value"))));
                } else if n == set_fut {
                    add_spec(
                        sig,
                        Spec::new(SpecKind::Requires, inst(Expr::value_of("fut_value"))),
                    );
                }
            }
        }
    }
    Ok(m)
}
