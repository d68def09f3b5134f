//! Terms, formulas and updates of the program logic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::abs_ir::{Stmt, Type};

use super::obligations::BehavioralContract;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sort {
    Int,
    Bool,
    Unit,
    /// All object references share one sort.
    Ref,
    Fut(Box<Sort>),
    Heap,
}

impl Sort {
    pub fn of_type(t: &Type) -> Sort {
        match t {
            Type::Int => Sort::Int,
            Type::Bool => Sort::Bool,
            Type::Unit => Sort::Unit,
            Type::Fut(inner) => Sort::Fut(Box::new(Sort::of_type(inner))),
            Type::Named(_) => Sort::Ref,
        }
    }

    /// Identifier-safe name, used to build solver symbols.
    pub fn tag(&self) -> String {
        match self {
            Sort::Int => "Int".into(),
            Sort::Bool => "Bool".into(),
            Sort::Unit => "Unit".into(),
            Sort::Ref => "Ref".into(),
            Sort::Fut(s) => format!("Fut_{}", s.tag()),
            Sort::Heap => "Heap".into(),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Division truncating toward zero.
    Div,
    Mod,
    Neg,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Mod => "%",
            Op::Neg => "-",
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "&&",
            Op::Or => "||",
            Op::Not => "!",
        }
    }

    pub fn result_sort(self) -> Sort {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Mod | Op::Neg => Sort::Int,
            _ => Sort::Bool,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    Int(i64),
    Bool(bool),
    Unit,
    Null,
    /// Logical (bound) variable.
    LVar(String, Sort),
    /// Program variable: locals, parameters, `heap`, `result`, `this`.
    PVar(String, Sort),
    /// Rigid fresh symbol introduced by a rule.
    Const(String, Sort),
    App(Op, Vec<Term>),
    /// Model function application.
    Fun(String, Sort, Vec<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
    /// `select(heap, field)`; the sort is the field's.
    Select(Box<Term>, String, Sort),
    Store(Box<Term>, String, Box<Term>),
    /// `val(fut)`; the sort is the future's value sort.
    Val(Box<Term>, Sort),
    Upd(Box<Update>, Box<Term>),
}

impl Term {
    pub fn pvar(name: &str, sort: Sort) -> Term {
        Term::PVar(name.to_string(), sort)
    }

    pub fn heap() -> Term {
        Term::pvar("heap", Sort::Heap)
    }

    pub fn app(op: Op, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    pub fn bin(op: Op, a: Term, b: Term) -> Term {
        Term::App(op, vec![a, b])
    }

    pub fn select(heap: Term, field: &str, sort: Sort) -> Term {
        Term::Select(Box::new(heap), field.to_string(), sort)
    }

    pub fn val(fut: Term) -> Term {
        let sort = match fut.sort() {
            Sort::Fut(s) => *s,
            other => other,
        };
        Term::Val(Box::new(fut), sort)
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Int(_) => Sort::Int,
            Term::Bool(_) => Sort::Bool,
            Term::Unit => Sort::Unit,
            Term::Null => Sort::Ref,
            Term::LVar(_, s) | Term::PVar(_, s) | Term::Const(_, s) => s.clone(),
            Term::App(op, _) => op.result_sort(),
            Term::Fun(_, s, _) => s.clone(),
            Term::Ite(_, a, _) => a.sort(),
            Term::Select(_, _, s) => s.clone(),
            Term::Store(..) => Sort::Heap,
            Term::Val(_, s) => s.clone(),
            Term::Upd(_, t) => t.sort(),
        }
    }

    fn children(&self) -> Vec<&Term> {
        match self {
            Term::App(_, a) | Term::Fun(_, _, a) => a.iter().collect(),
            Term::Ite(c, a, b) => vec![c, a, b],
            Term::Select(h, _, _) => vec![h],
            Term::Store(h, _, v) => vec![h, v],
            Term::Val(t, _) => vec![t],
            Term::Upd(_, t) => vec![t],
            _ => Vec::new(),
        }
    }

    /// Visits every sub-term, pre-order. Does not descend into updates.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn has_update(&self) -> bool {
        let mut found = false;
        self.walk(&mut |t| found |= matches!(t, Term::Upd(..)));
        found
    }

    fn free_lvars(&self, out: &mut BTreeSet<String>) {
        self.walk(&mut |t| {
            if let Term::LVar(x, _) = t {
                out.insert(x.clone());
            }
        });
    }

    fn rename_lvar(&self, from: &str, to: &str) -> Term {
        match self {
            Term::LVar(x, s) if x == from => Term::LVar(to.to_string(), s.clone()),
            _ => self.map_children(&|c| c.rename_lvar(from, to)),
        }
    }

    fn map_children(&self, f: &dyn Fn(&Term) -> Term) -> Term {
        match self {
            Term::App(op, a) => Term::App(*op, a.iter().map(f).collect()),
            Term::Fun(n, s, a) => Term::Fun(n.clone(), s.clone(), a.iter().map(f).collect()),
            Term::Ite(c, a, b) => Term::Ite(Box::new(f(c)), Box::new(f(a)), Box::new(f(b))),
            Term::Select(h, fld, s) => Term::Select(Box::new(f(h)), fld.clone(), s.clone()),
            Term::Store(h, fld, v) => Term::Store(Box::new(f(h)), fld.clone(), Box::new(f(v))),
            Term::Val(t, s) => Term::Val(Box::new(f(t)), s.clone()),
            Term::Upd(u, t) => Term::Upd(u.clone(), Box::new(f(t))),
            _ => self.clone(),
        }
    }

    /// Simultaneous substitution of program variables, followed by
    /// simplification. Nested updates are resolved first.
    pub fn subst(&self, s: &Subst) -> Term {
        let t = match self {
            Term::PVar(v, _) => return s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Upd(u, inner) => {
                let inner = inner.subst(&u.to_subst());
                return inner.subst(s);
            }
            _ => self.map_children(&|c| c.subst(s)),
        };
        simplify(t)
    }
}

/// Program-variable substitution: the normal form of an update.
pub type Subst = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Update {
    /// `v := t`
    Assign(String, Term),
    /// `U1 || U2`
    Par(Box<Update>, Box<Update>),
    /// `{U1}U2`
    Apply(Box<Update>, Box<Update>),
}

impl Update {
    pub fn assign(v: &str, t: Term) -> Update {
        Update::Assign(v.to_string(), t)
    }

    pub fn par(a: Update, b: Update) -> Update {
        Update::Par(Box::new(a), Box::new(b))
    }

    /// Sequential composition `U1; U2`, i.e. `U1 || {U1}U2`.
    pub fn seq(a: Update, b: Update) -> Update {
        Update::par(a.clone(), Update::Apply(Box::new(a), Box::new(b)))
    }

    /// Normal form. Parallel clashes are resolved right-wins.
    pub fn to_subst(&self) -> Subst {
        match self {
            Update::Assign(v, t) => {
                let t = t.subst(&Subst::new());
                Subst::from([(v.clone(), t)])
            }
            Update::Par(a, b) => {
                let mut s = a.to_subst();
                s.extend(b.to_subst());
                s
            }
            Update::Apply(a, b) => {
                let outer = a.to_subst();
                b.to_subst()
                    .into_iter()
                    .map(|(v, t)| (v, t.subst(&outer)))
                    .collect()
            }
        }
    }

    pub fn from_subst(s: &Subst) -> Option<Update> {
        s.iter()
            .map(|(v, t)| Update::Assign(v.clone(), t.clone()))
            .reduce(Update::par)
    }
}

/// `[s ⊩ inv, M, φ, ψ]`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modality {
    pub body: Vec<Stmt>,
    pub contract: BehavioralContract,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Formula {
    True,
    False,
    /// A Bool-sorted term.
    Atom(Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
    Forall(String, Sort, Box<Formula>),
    Modality(Box<Modality>),
    Upd(Box<Update>, Box<Formula>),
}

impl Formula {
    pub fn atom(t: Term) -> Formula {
        match t {
            Term::Bool(true) => Formula::True,
            Term::Bool(false) => Formula::False,
            t => Formula::Atom(t),
        }
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Atom(Term::bin(Op::Eq, a, b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::True, _) => b,
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            _ => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn update(u: Update, f: Formula) -> Formula {
        Formula::Upd(Box::new(u), Box::new(f))
    }

    pub fn has_modality(&self) -> bool {
        match self {
            Formula::Modality(_) => true,
            Formula::Not(f) | Formula::Exists(_, _, f) | Formula::Forall(_, _, f) => {
                f.has_modality()
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_modality),
            Formula::Implies(a, b) => a.has_modality() || b.has_modality(),
            Formula::Upd(_, f) => f.has_modality(),
            _ => false,
        }
    }

    pub fn has_update(&self) -> bool {
        match self {
            Formula::Atom(t) => t.has_update(),
            Formula::Upd(..) => true,
            Formula::Not(f) | Formula::Exists(_, _, f) | Formula::Forall(_, _, f) => f.has_update(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_update),
            Formula::Implies(a, b) => a.has_update() || b.has_update(),
            _ => false,
        }
    }

    /// Visits every term occurring in the formula.
    pub fn terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        match self {
            Formula::Atom(t) => t.walk(f),
            Formula::Not(g) | Formula::Exists(_, _, g) | Formula::Forall(_, _, g) => g.terms(f),
            Formula::Upd(_, g) => g.terms(f),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.terms(f)),
            Formula::Implies(a, b) => {
                a.terms(f);
                b.terms(f);
            }
            _ => {}
        }
    }

    /// Applies a substitution, avoiding capture of bound logical variables.
    pub fn subst(&self, s: &Subst) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(t) => Formula::atom(t.subst(s)),
            Formula::Not(f) => Formula::not(f.subst(s)),
            Formula::And(fs) => Formula::and(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Or(fs) => Formula::or(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.subst(s), b.subst(s)),
            Formula::Exists(x, sort, f) | Formula::Forall(x, sort, f) => {
                let mut free = BTreeSet::new();
                for t in s.values() {
                    t.free_lvars(&mut free);
                }
                let (x, body) = if free.contains(x) {
                    let mut k = 1;
                    let mut y = format!("{x}_{k}");
                    while free.contains(&y) || f.mentions_lvar(&y) {
                        k += 1;
                        y = format!("{x}_{k}");
                    }
                    (y.clone(), f.rename_lvar(x, &y))
                } else {
                    (x.clone(), (**f).clone())
                };
                let body = Box::new(body.subst(s));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(x, sort.clone(), body)
                } else {
                    Formula::Forall(x, sort.clone(), body)
                }
            }
            Formula::Upd(u, f) => {
                if f.has_modality() {
                    let inner = u.to_subst();
                    let composed = compose(s, &inner);
                    match Update::from_subst(&composed) {
                        Some(u) => Formula::update(u, (**f).clone()),
                        None => (**f).clone(),
                    }
                } else {
                    f.subst(&u.to_subst()).subst(s)
                }
            }
            Formula::Modality(_) => match Update::from_subst(s) {
                Some(u) if !s.is_empty() => Formula::update(u, self.clone()),
                _ => self.clone(),
            },
        }
    }

    fn mentions_lvar(&self, x: &str) -> bool {
        let mut found = false;
        self.terms(&mut |t| found |= matches!(t, Term::LVar(y, _) if y == x));
        found
    }

    fn rename_lvar(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Atom(t) => Formula::Atom(t.rename_lvar(from, to)),
            Formula::Not(f) => Formula::Not(Box::new(f.rename_lvar(from, to))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename_lvar(from, to)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename_lvar(from, to)).collect()),
            Formula::Implies(a, b) => Formula::Implies(
                Box::new(a.rename_lvar(from, to)),
                Box::new(b.rename_lvar(from, to)),
            ),
            Formula::Exists(x, s, f) if x != from => {
                Formula::Exists(x.clone(), s.clone(), Box::new(f.rename_lvar(from, to)))
            }
            Formula::Forall(x, s, f) if x != from => {
                Formula::Forall(x.clone(), s.clone(), Box::new(f.rename_lvar(from, to)))
            }
            Formula::Upd(u, f) => Formula::Upd(u.clone(), Box::new(f.rename_lvar(from, to))),
            _ => self.clone(),
        }
    }
}

/// Substitution equivalent to applying `outer` after `inner`: `{outer}{inner}`.
pub fn compose(outer: &Subst, inner: &Subst) -> Subst {
    let mut out = outer.clone();
    for (v, t) in inner {
        out.insert(v.clone(), t.subst(outer));
    }
    out
}

/// Removes every update application from a modality-free formula.
pub fn apply_updates(f: &Formula) -> Formula {
    f.subst(&Subst::new())
}

fn simplify(t: Term) -> Term {
    match t {
        Term::Select(h, f, s) => select(*h, f, s),
        Term::App(op, args) => simplify_app(op, args),
        Term::Ite(c, a, b) => match *c {
            Term::Bool(true) => *a,
            Term::Bool(false) => *b,
            _ if a == b => *a,
            c => Term::Ite(Box::new(c), a, b),
        },
        t => t,
    }
}

/// Select-over-store with distinct field identifiers.
fn select(heap: Term, field: String, sort: Sort) -> Term {
    match heap {
        Term::Store(inner, g, v) => {
            if g == field {
                *v
            } else {
                select(*inner, field, sort)
            }
        }
        h => Term::Select(Box::new(h), field, sort),
    }
}

fn simplify_app(op: Op, args: Vec<Term>) -> Term {
    use Term::{Bool, Int};
    let folded = match (op, args.as_slice()) {
        (Op::Add, [Int(a), Int(b)]) => a.checked_add(*b).map(Int),
        (Op::Sub, [Int(a), Int(b)]) => a.checked_sub(*b).map(Int),
        (Op::Mul, [Int(a), Int(b)]) => a.checked_mul(*b).map(Int),
        (Op::Div, [Int(a), Int(b)]) if *b != 0 => a.checked_div(*b).map(Int),
        (Op::Mod, [Int(a), Int(b)]) if *b != 0 => a.checked_rem(*b).map(Int),
        (Op::Neg, [Int(a)]) => a.checked_neg().map(Int),
        (Op::Lt, [Int(a), Int(b)]) => Some(Bool(a < b)),
        (Op::Le, [Int(a), Int(b)]) => Some(Bool(a <= b)),
        (Op::Gt, [Int(a), Int(b)]) => Some(Bool(a > b)),
        (Op::Ge, [Int(a), Int(b)]) => Some(Bool(a >= b)),
        (Op::Eq, [a, b]) if is_literal(a) && is_literal(b) => Some(Bool(a == b)),
        (Op::Ne, [a, b]) if is_literal(a) && is_literal(b) => Some(Bool(a != b)),
        (Op::Not, [Bool(a)]) => Some(Bool(!a)),
        (Op::And, [Bool(false), _]) | (Op::And, [_, Bool(false)]) => Some(Bool(false)),
        (Op::And, [Bool(true), x]) | (Op::And, [x, Bool(true)]) => Some(x.clone()),
        (Op::Or, [Bool(true), _]) | (Op::Or, [_, Bool(true)]) => Some(Bool(true)),
        (Op::Or, [Bool(false), x]) | (Op::Or, [x, Bool(false)]) => Some(x.clone()),
        _ => None,
    };
    folded.unwrap_or(Term::App(op, args))
}

fn is_literal(t: &Term) -> bool {
    matches!(t, Term::Int(_) | Term::Bool(_) | Term::Unit | Term::Null)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Bool(b) => write!(f, "{b}"),
            Term::Unit => f.write_str("unit"),
            Term::Null => f.write_str("null"),
            Term::LVar(x, _) | Term::PVar(x, _) | Term::Const(x, _) => f.write_str(x),
            Term::App(op, args) => match args.as_slice() {
                [a] => write!(f, "{}{a}", op.symbol()),
                [a, b] => write!(f, "({a} {} {b})", op.symbol()),
                _ => write!(f, "{}(?)", op.symbol()),
            },
            Term::Fun(n, _, args) => {
                write!(f, "{n}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Ite(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            Term::Select(h, fld, _) => write!(f, "select({h}, {fld})"),
            Term::Store(h, fld, v) => write!(f, "store({h}, {fld}, {v})"),
            Term::Val(t, _) => write!(f, "val({t})"),
            Term::Upd(u, t) => write!(f, "{{{u}}}{t}"),
        }
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Update::Assign(v, t) => write!(f, "{v} := {t}"),
            Update::Par(a, b) => write!(f, "{a} || {b}"),
            Update::Apply(a, b) => write!(f, "{{{a}}}({b})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[Formula], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (k, g) in fs.iter().enumerate() {
                if k > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(t) => write!(f, "{t}"),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(fs) => join(f, fs, "&&"),
            Formula::Or(fs) => join(f, fs, "||"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Exists(x, s, g) => write!(f, "(exists {x}:{s}. {g})"),
            Formula::Forall(x, s, g) => write!(f, "(forall {x}:{s}. {g})"),
            Formula::Modality(m) => write!(f, "[{} stmts ⊩ ...]", m.body.len()),
            Formula::Upd(u, g) => write!(f, "{{{u}}}{g}"),
        }
    }
}
