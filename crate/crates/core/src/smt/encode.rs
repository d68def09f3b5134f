//! SMT-LIB encoding of first-order sequents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use crate::abs_ir::FunDef;
use crate::prover::obligations::{FieldMode, Lower};
use crate::prover::{Formula, Op, Sequent, Sort, Subst, Term};

use super::SmtError;

/// How model functions reach the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum FunctionEncoding {
    /// `define-fun-rec` / `define-funs-rec`.
    #[default]
    Recursive,
    /// Uninterpreted function plus a universally quantified defining axiom.
    Axiom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmtScript {
    pub comment: String,
    pub declarations: Vec<String>,
    pub definitions: Vec<String>,
    pub assertion: String,
}

impl SmtScript {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for line in self.comment.lines() {
            let _ = writeln!(out, "; {line}");
        }
        out.push_str("(set-option :produce-models true)\n(set-logic ALL)\n");
        for d in &self.declarations {
            out.push_str(d);
            out.push('\n');
        }
        for d in &self.definitions {
            out.push_str(d);
            out.push('\n');
        }
        let _ = writeln!(out, "(assert {})", self.assertion);
        out.push_str("(check-sat)\n(get-model)\n");
        out
    }
}

fn sort_name(s: &Sort) -> Result<String, SmtError> {
    match s {
        Sort::Heap => Err(SmtError::UnencodableTerm("heap used as a value".into())),
        s => Ok(s.tag()),
    }
}

#[derive(Default)]
struct Symbols {
    sorts: BTreeSet<Sort>,
    consts: BTreeMap<String, Sort>,
    heaps: BTreeSet<(String, Sort)>,
    fields: BTreeSet<String>,
    vals: BTreeSet<Sort>,
    cdiv: bool,
}

impl Symbols {
    fn sort(&mut self, s: &Sort) {
        if let Sort::Fut(inner) = s {
            self.sort(inner);
        }
        self.sorts.insert(s.clone());
    }
}

fn heap_name(h: &Term) -> Result<String, SmtError> {
    match h {
        Term::PVar(n, Sort::Heap) | Term::Const(n, Sort::Heap) => Ok(n.clone()),
        other => Err(SmtError::UnencodableTerm(format!("heap term {other}"))),
    }
}

fn term(t: &Term, sy: &mut Symbols) -> Result<String, SmtError> {
    Ok(match t {
        Term::Int(v) => {
            if *v < 0 {
                format!("(- {})", (*v as i128).abs())
            } else {
                v.to_string()
            }
        }
        Term::Bool(b) => b.to_string(),
        Term::Unit => {
            sy.sort(&Sort::Unit);
            "unit".into()
        }
        Term::Null => {
            sy.sort(&Sort::Ref);
            "null".into()
        }
        Term::LVar(x, _) => format!("?{x}"),
        Term::PVar(n, s) | Term::Const(n, s) => {
            sort_name(s)?;
            sy.sort(s);
            sy.consts.insert(n.clone(), s.clone());
            n.clone()
        }
        Term::App(op, args) => {
            let a = args
                .iter()
                .map(|x| term(x, sy))
                .collect::<Result<Vec<_>, _>>()?;
            let name = match op {
                Op::Add => "+",
                Op::Sub | Op::Neg => "-",
                Op::Mul => "*",
                Op::Div => {
                    sy.cdiv = true;
                    "c_div"
                }
                Op::Mod => {
                    sy.cdiv = true;
                    "c_mod"
                }
                Op::Eq => "=",
                Op::Ne => return Ok(format!("(not (= {}))", a.join(" "))),
                Op::Lt => "<",
                Op::Le => "<=",
                Op::Gt => ">",
                Op::Ge => ">=",
                Op::And => "and",
                Op::Or => "or",
                Op::Not => "not",
            };
            format!("({name} {})", a.join(" "))
        }
        Term::Fun(f, _, args) => {
            let a = args
                .iter()
                .map(|x| term(x, sy))
                .collect::<Result<Vec<_>, _>>()?;
            if a.is_empty() {
                format!("fun.{f}")
            } else {
                format!("(fun.{f} {})", a.join(" "))
            }
        }
        Term::Ite(c, a, b) => format!("(ite {} {} {})", term(c, sy)?, term(a, sy)?, term(b, sy)?),
        Term::Select(h, f, s) => {
            let name = heap_name(h)?;
            sort_name(s)?;
            sy.sort(s);
            sy.heaps.insert((name.clone(), s.clone()));
            sy.fields.insert(f.clone());
            format!("(select {name}.{} field.{f})", s.tag())
        }
        Term::Val(fut, s) => {
            sort_name(s)?;
            sy.sort(s);
            sy.sort(&Sort::Fut(Box::new(s.clone())));
            sy.vals.insert(s.clone());
            format!("(val.{} {})", s.tag(), term(fut, sy)?)
        }
        Term::Store(..) => return Err(SmtError::UnencodableTerm(format!("unresolved {t}"))),
        Term::Upd(..) => {
            return Err(SmtError::UnencodableTerm(format!(
                "unapplied update in {t}"
            )))
        }
    })
}

fn formula(f: &Formula, sy: &mut Symbols) -> Result<String, SmtError> {
    let many = |fs: &[Formula], op: &str, sy: &mut Symbols| -> Result<String, SmtError> {
        let parts = fs
            .iter()
            .map(|g| formula(g, sy))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(format!("({op} {})", parts.join(" ")))
    };
    Ok(match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(t) => term(t, sy)?,
        Formula::Not(g) => format!("(not {})", formula(g, sy)?),
        Formula::And(fs) => many(fs, "and", sy)?,
        Formula::Or(fs) => many(fs, "or", sy)?,
        Formula::Implies(a, b) => format!("(=> {} {})", formula(a, sy)?, formula(b, sy)?),
        Formula::Exists(x, s, g) | Formula::Forall(x, s, g) => {
            let q = if matches!(f, Formula::Exists(..)) {
                "exists"
            } else {
                "forall"
            };
            sy.sort(s);
            format!("({q} ((?{x} {})) {})", sort_name(s)?, formula(g, sy)?)
        }
        Formula::Modality(_) => return Err(SmtError::UnencodableTerm("modality in a goal".into())),
        Formula::Upd(..) => {
            return Err(SmtError::UnencodableTerm(
                "unapplied update in a goal".into(),
            ))
        }
    })
}

fn function_defs(
    functions: &[FunDef],
    encoding: FunctionEncoding,
    sy: &mut Symbols,
) -> Result<Vec<String>, SmtError> {
    let sorts: BTreeMap<String, Sort> = functions
        .iter()
        .map(|f| (f.name.clone(), Sort::of_type(&f.ret)))
        .collect();
    let mut decls = Vec::new();
    let mut bodies = Vec::new();
    for f in functions {
        let locals = f
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect();
        let lower = Lower {
            fields: &[],
            functions: &sorts,
            locals: &locals,
            mode: FieldMode::Heap,
        };
        let body = lower
            .term(&f.body)
            .map_err(|e| SmtError::UnencodableTerm(format!("function {}: {e}", f.name)))?;
        let bound: Subst = f
            .params
            .iter()
            .map(|p| {
                (
                    p.name.clone(),
                    Term::LVar(p.name.clone(), Sort::of_type(&p.ty)),
                )
            })
            .collect();
        let body = term(&body.subst(&bound), sy)?;
        let params = f
            .params
            .iter()
            .map(|p| Ok((format!("?{}", p.name), sort_name(&Sort::of_type(&p.ty))?)))
            .collect::<Result<Vec<_>, SmtError>>()?;
        let ret = sort_name(&Sort::of_type(&f.ret))?;
        decls.push((f.name.clone(), params, ret));
        bodies.push(body);
    }
    if functions.is_empty() {
        return Ok(Vec::new());
    }
    let binders = |p: &[(String, String)]| {
        p.iter()
            .map(|(n, s)| format!("({n} {s})"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(match encoding {
        FunctionEncoding::Recursive if functions.len() == 1 => {
            let (n, p, r) = &decls[0];
            vec![format!(
                "(define-fun-rec fun.{n} ({}) {r}\n  {})",
                binders(p),
                bodies[0]
            )]
        }
        FunctionEncoding::Recursive => {
            let heads: Vec<String> = decls
                .iter()
                .map(|(n, p, r)| format!("(fun.{n} ({}) {r})", binders(p)))
                .collect();
            vec![format!(
                "(define-funs-rec ({})\n  ({}))",
                heads.join(" "),
                bodies.join("\n   ")
            )]
        }
        FunctionEncoding::Axiom => {
            let mut out = Vec::new();
            for ((n, p, r), body) in decls.iter().zip(&bodies) {
                let arg_sorts: Vec<&str> = p.iter().map(|(_, s)| s.as_str()).collect();
                out.push(format!(
                    "(declare-fun fun.{n} ({}) {r})",
                    arg_sorts.join(" ")
                ));
                if p.is_empty() {
                    out.push(format!("(assert (= fun.{n} {body}))"));
                } else {
                    let names: Vec<&str> = p.iter().map(|(n, _)| n.as_str()).collect();
                    out.push(format!(
                        "(assert (forall ({}) (= (fun.{n} {}) {body})))",
                        binders(p),
                        names.join(" ")
                    ));
                }
            }
            out
        }
    })
}

const C_DIV: &str = "(define-fun c_div ((a Int) (b Int)) Int\n  (ite (>= a 0) (ite (> b 0) (div a b) (- (div a (- b)))) (ite (> b 0) (- (div (- a) b)) (div (- a) (- b)))))";
const C_MOD: &str = "(define-fun c_mod ((a Int) (b Int)) Int (- a (* b (c_div a b))))";

/// Script asserting the negation of the sequent.
pub fn encode(
    seq: &Sequent,
    functions: &[FunDef],
    encoding: FunctionEncoding,
) -> Result<SmtScript, SmtError> {
    let mut sy = Symbols::default();
    let gamma = seq
        .gamma
        .iter()
        .map(|f| formula(f, &mut sy))
        .collect::<Result<Vec<_>, _>>()?;
    let delta = seq
        .delta
        .iter()
        .map(|f| formula(f, &mut sy))
        .collect::<Result<Vec<_>, _>>()?;
    let definitions_fns = function_defs(functions, encoding, &mut sy)?;

    let mut declarations = Vec::new();
    for s in &sy.sorts {
        match s {
            Sort::Int | Sort::Bool | Sort::Heap => {}
            s => declarations.push(format!("(declare-sort {} 0)", s.tag())),
        }
    }
    if sy.sorts.contains(&Sort::Ref) {
        declarations.push("(declare-const null Ref)".into());
    }
    if sy.sorts.contains(&Sort::Unit) {
        declarations.push("(declare-const unit Unit)".into());
    }
    if !sy.fields.is_empty() {
        declarations.push("(declare-sort Field 0)".into());
        for f in &sy.fields {
            declarations.push(format!("(declare-const field.{f} Field)"));
        }
        if sy.fields.len() > 1 {
            let all: Vec<String> = sy.fields.iter().map(|f| format!("field.{f}")).collect();
            declarations.push(format!("(assert (distinct {}))", all.join(" ")));
        }
    }
    for s in &sy.vals {
        declarations.push(format!(
            "(declare-fun val.{} ({}) {})",
            s.tag(),
            Sort::Fut(Box::new(s.clone())).tag(),
            s.tag()
        ));
    }
    for (n, s) in &sy.consts {
        declarations.push(format!("(declare-const {n} {})", sort_name(s)?));
    }
    for (h, s) in &sy.heaps {
        declarations.push(format!(
            "(declare-const {h}.{} (Array Field {}))",
            s.tag(),
            s.tag()
        ));
    }

    let mut definitions = Vec::new();
    if sy.cdiv {
        definitions.push(C_DIV.to_string());
        definitions.push(C_MOD.to_string());
    }
    definitions.extend(definitions_fns);

    let lhs = match gamma.len() {
        0 => "true".to_string(),
        1 => gamma[0].clone(),
        _ => format!("(and {})", gamma.join(" ")),
    };
    let rhs = match delta.len() {
        0 => "false".to_string(),
        1 => delta[0].clone(),
        _ => format!("(or {})", delta.join(" ")),
    };
    Ok(SmtScript {
        comment: seq.origin.clone(),
        declarations,
        definitions,
        assertion: format!("(not (=> {lhs} {rhs}))"),
    })
}
