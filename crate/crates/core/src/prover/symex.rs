//! Symbolic execution of method bodies down to first-order sequents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::abs_ir::{declared_locals, print_stmt, BinOp, Expr, Rhs, Stmt, Target, Type};

use super::logic::{Formula, Op, Sort, Subst, Term};
use super::obligations::{
    default_value, CalleeContract, FieldMode, Lower, PoKind, ProofObligation,
};
use super::ProverError;

/// `Γ ⇒ Δ`, tagged with the rule application that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sequent {
    pub gamma: Vec<Formula>,
    pub delta: Vec<Formula>,
    pub origin: String,
}

impl Sequent {
    /// `∧Γ → ∨Δ`
    pub fn formula(&self) -> Formula {
        Formula::implies(
            Formula::and(self.gamma.clone()),
            Formula::or(self.delta.clone()),
        )
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |fs: &[Formula]| {
            fs.iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(
            f,
            "[{}] {} ==> {}",
            self.origin,
            join(&self.gamma),
            join(&self.delta)
        )
    }
}

#[derive(Clone)]
struct State {
    gamma: Vec<Formula>,
    upd: Subst,
    types: BTreeMap<String, Type>,
}

struct Exec<'a> {
    po: &'a ProofObligation,
    fresh: usize,
    goals: Vec<Sequent>,
}

type Cont<'a> = Vec<&'a [Stmt]>;

/// Reduces an obligation to modality- and update-free sequents.
pub fn symbolic_execute(po: &ProofObligation) -> Result<Vec<Sequent>, ProverError> {
    if po.kind == PoKind::ClassInitialization {
        if po.contract.inv == Formula::True {
            return Ok(Vec::new());
        }
        return Ok(vec![Sequent {
            gamma: vec![po.antecedent.clone()],
            delta: vec![po.contract.inv.clone()],
            origin: "init: object invariant".into(),
        }]);
    }
    let mut ex = Exec {
        po,
        fresh: 0,
        goals: Vec::new(),
    };
    let state = State {
        gamma: vec![po.antecedent.clone()],
        upd: Subst::new(),
        types: po.params.iter().cloned().collect(),
    };
    ex.run(state, vec![&po.body], &po.contract.stmt_post)?;
    Ok(ex.goals)
}

fn pop<'a>(cont: &mut Cont<'a>) -> Option<&'a Stmt> {
    while let Some(top) = cont.last_mut() {
        if let Some((first, rest)) = top.split_first() {
            *top = rest;
            return Some(first);
        }
        cont.pop();
    }
    None
}

fn stmt_text(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(s, 0, &mut out);
    out.lines().next().unwrap_or("").trim().to_string()
}

impl<'a> Exec<'a> {
    fn fresh(&mut self, base: &str, sort: Sort) -> Term {
        self.fresh += 1;
        Term::Const(format!("{base}!{}", self.fresh), sort)
    }

    fn lower<'s>(&'s self, st: &'s State) -> Lower<'s> {
        Lower {
            fields: &self.po.fields,
            functions: &self.po.functions,
            locals: &st.types,
            mode: FieldMode::Heap,
        }
    }

    /// `{U}e`
    fn eval(&self, st: &State, e: &Expr) -> Result<Term, ProverError> {
        Ok(self.lower(st).term(e)?.subst(&st.upd))
    }

    fn goal(&mut self, st: &State, delta: Formula, origin: String) {
        if delta == Formula::True || st.gamma.contains(&Formula::False) {
            return;
        }
        self.goals.push(Sequent {
            gamma: st.gamma.clone(),
            delta: vec![delta],
            origin,
        });
    }

    fn assume(st: &mut State, f: Formula) {
        match f {
            Formula::True => {}
            Formula::And(fs) => st.gamma.extend(fs),
            f => st.gamma.push(f),
        }
    }

    /// Side goals `divisor != 0` for every division in `e`.
    fn div_guards(&mut self, st: &State, e: &Expr) -> Result<(), ProverError> {
        let mut divisors = Vec::new();
        e.walk(&mut |sub| {
            if let Expr::Binary(BinOp::Div | BinOp::Mod, _, d) = sub {
                divisors.push((**d).clone());
            }
        });
        for d in divisors {
            let t = self.eval(st, &d)?;
            let f = Formula::atom(Term::bin(Op::Ne, t, Term::Int(0)));
            self.goal(
                st,
                f,
                format!("division by zero guard: {}", crate::abs_ir::print_expr(&d)),
            );
        }
        Ok(())
    }

    fn run(&mut self, mut st: State, mut cont: Cont<'a>, psi: &Formula) -> Result<(), ProverError> {
        loop {
            let Some(stmt) = pop(&mut cont) else {
                let f = psi.subst(&st.upd);
                self.goal(&st, f, "skip: statement postcondition".into());
                return Ok(());
            };
            match stmt {
                Stmt::Skip => {}
                Stmt::Block(b) => cont.push(b),
                Stmt::VarDecl { ty, name, init } => {
                    st.types.insert(name.clone(), ty.clone());
                    match init {
                        Some(r) => self.assign(&mut st, &Target::Var(name.clone()), r, stmt)?,
                        None => {
                            let t = match ty {
                                Type::Fut(_) => self.fresh(name, Sort::of_type(ty)),
                                _ => self.eval(&st, &default_value(ty))?,
                            };
                            st.upd.insert(name.clone(), t);
                        }
                    }
                }
                Stmt::Assign { target, value } => self.assign(&mut st, target, value, stmt)?,
                Stmt::Rhs(r) => match r {
                    Rhs::Expr(e) => self.div_guards(&st, e)?,
                    Rhs::Get(_) => {}
                    Rhs::AsyncCall { .. } | Rhs::New { .. } => {
                        self.rhs_value(&mut st, r, stmt)?;
                    }
                    Rhs::SyncCall { .. } => {
                        return Err(ProverError::UnknownStatementForm(stmt_text(stmt)))
                    }
                },
                Stmt::Await(_) => {
                    let inv = self.po.contract.inv.subst(&st.upd);
                    self.goal(
                        &st,
                        inv,
                        format!("await: object invariant ({})", stmt_text(stmt)),
                    );
                    let h = self.fresh("heap", Sort::Heap);
                    st.upd.insert("heap".into(), h);
                    let inv = self.po.contract.inv.subst(&st.upd);
                    Self::assume(&mut st, inv);
                }
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.div_guards(&st, cond)?;
                    let c = Formula::atom(self.eval(&st, cond)?);
                    let empty: &[Stmt] = &[];
                    let els = else_branch.as_deref().unwrap_or(empty);
                    match c {
                        Formula::True => cont.push(then_branch),
                        Formula::False => cont.push(els),
                        c => {
                            let mut st_then = st.clone();
                            Self::assume(&mut st_then, c.clone());
                            let mut cont_then = cont.clone();
                            cont_then.push(then_branch);
                            self.run(st_then, cont_then, psi)?;
                            Self::assume(&mut st, Formula::not(c));
                            cont.push(els);
                        }
                    }
                }
                Stmt::While {
                    cond,
                    invariants,
                    body,
                } => {
                    let lower = self.lower(&st);
                    let inv = lower.conj(invariants.iter())?;
                    let init = inv.subst(&st.upd);
                    self.goal(&st, init, "loop: invariant initially valid".into());

                    let mut anon = st.clone();
                    let mut assigned = BTreeSet::new();
                    let mut heap = false;
                    let mut inner = Vec::new();
                    declared_locals(body, &mut inner);
                    loop_effects(body, &st.types, &inner, &mut assigned, &mut heap);
                    for v in &assigned {
                        let sort = Sort::of_type(&st.types[v]);
                        let c = self.fresh(v, sort);
                        anon.upd.insert(v.clone(), c);
                    }
                    if heap {
                        let h = self.fresh("heap", Sort::Heap);
                        anon.upd.insert("heap".into(), h);
                    }
                    self.div_guards(&anon, cond)?;
                    let guard = Formula::atom(self.eval(&anon, cond)?);
                    let inv_anon = inv.subst(&anon.upd);

                    let mut body_st = anon.clone();
                    Self::assume(&mut body_st, inv_anon.clone());
                    Self::assume(&mut body_st, guard.clone());
                    self.run(body_st, vec![body.as_slice()], &inv)?;

                    st = anon;
                    Self::assume(&mut st, inv_anon);
                    Self::assume(&mut st, Formula::not(guard));
                }
                Stmt::Return(r) => {
                    let Rhs::Expr(e) = r else {
                        return Err(ProverError::UnknownStatementForm(stmt_text(stmt)));
                    };
                    self.div_guards(&st, e)?;
                    let v = self.eval(&st, e)?;
                    let mut upd = st.upd.clone();
                    upd.insert("result".into(), v);
                    let c = &self.po.contract;
                    let goal = Formula::and(vec![c.inv.clone(), c.post.clone(), psi.clone()]);
                    let goal = goal.subst(&upd);
                    self.goal(
                        &st,
                        goal,
                        format!("return: postcondition ({})", stmt_text(stmt)),
                    );
                    return Ok(());
                }
            }
        }
    }

    fn assign(
        &mut self,
        st: &mut State,
        target: &Target,
        value: &Rhs,
        stmt: &Stmt,
    ) -> Result<(), ProverError> {
        let t = self.rhs_value(st, value, stmt)?;
        match target {
            Target::Var(v) if st.types.contains_key(v) => {
                st.upd.insert(v.clone(), t);
            }
            Target::Var(f) | Target::Field(f) => {
                if !self.po.fields.iter().any(|(n, _)| n == f) {
                    return Err(ProverError::UnknownSymbol(f.clone()));
                }
                let heap = st.upd.get("heap").cloned().unwrap_or_else(Term::heap);
                st.upd.insert(
                    "heap".into(),
                    Term::Store(Box::new(heap), f.clone(), Box::new(t)),
                );
            }
        }
        Ok(())
    }

    fn rhs_value(&mut self, st: &mut State, r: &Rhs, stmt: &Stmt) -> Result<Term, ProverError> {
        match r {
            Rhs::Expr(e) => {
                self.div_guards(st, e)?;
                self.eval(st, e)
            }
            Rhs::Get(e) => Ok(Term::val(self.eval(st, e)?)),
            Rhs::AsyncCall {
                callee,
                method,
                args,
            } => {
                let ty = self.static_type(st, callee)?;
                let key = format!("{ty}.{method}");
                let contract = self.po.contract.callees.get(&key).cloned();
                let args = self.eval_args(st, args)?;
                let ret = contract
                    .as_ref()
                    .map(|c| c.ret.clone())
                    .unwrap_or(Sort::Int);
                let fut = self.fresh("fut", Sort::Fut(Box::new(ret)));
                if let Some(c) = contract {
                    let mut s = bind(&c, &args);
                    let pre = c.pre.subst(&s);
                    self.goal(
                        st,
                        pre,
                        format!("call: precondition of {key} ({})", stmt_text(stmt)),
                    );
                    s.insert("result".into(), Term::val(fut.clone()));
                    let post = c.post.subst(&s);
                    Self::assume(st, post);
                }
                Ok(fut)
            }
            Rhs::New { class, args } => {
                let args = self.eval_args(st, args)?;
                if let Some(c) = self.po.constructors.get(class) {
                    let pre = c.pre.subst(&bind(c, &args));
                    self.goal(st, pre, format!("new: creation precondition of {class}"));
                }
                let obj = self.fresh("obj", Sort::Ref);
                Self::assume(
                    st,
                    Formula::atom(Term::bin(Op::Ne, obj.clone(), Term::Null)),
                );
                Ok(obj)
            }
            Rhs::SyncCall { .. } => Err(ProverError::UnknownStatementForm(stmt_text(stmt))),
        }
    }

    fn eval_args(&mut self, st: &State, args: &[Expr]) -> Result<Vec<Term>, ProverError> {
        args.iter()
            .map(|a| {
                self.div_guards(st, a)?;
                self.eval(st, a)
            })
            .collect()
    }

    fn static_type(&self, st: &State, callee: &Expr) -> Result<String, ProverError> {
        let ty = match callee {
            Expr::This => return Ok(self.po.class.clone()),
            Expr::Var(v) => st
                .types
                .get(v)
                .or_else(|| self.field_type(v))
                .ok_or_else(|| ProverError::UnknownSymbol(v.clone()))?,
            Expr::Field(f) => self
                .field_type(f)
                .ok_or_else(|| ProverError::UnknownSymbol(format!("this.{f}")))?,
            other => {
                return Err(ProverError::UnknownStatementForm(format!(
                    "call on {}",
                    crate::abs_ir::print_expr(other)
                )))
            }
        };
        match ty {
            Type::Named(n) => Ok(n.clone()),
            other => Err(ProverError::UnknownStatementForm(format!(
                "call on a value of type {other}"
            ))),
        }
    }

    fn field_type(&self, name: &str) -> Option<&'a Type> {
        self.po
            .fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }
}

fn bind(c: &CalleeContract, args: &[Term]) -> Subst {
    c.params
        .iter()
        .zip(args)
        .map(|((p, _), a)| (p.clone(), a.clone()))
        .collect()
}

/// Locals assigned in a loop body, and whether the body may change the heap.
fn loop_effects(
    body: &[Stmt],
    outer: &BTreeMap<String, Type>,
    inner: &[String],
    assigned: &mut BTreeSet<String>,
    heap: &mut bool,
) {
    for s in body {
        match s {
            Stmt::Assign { target, .. } => match target {
                Target::Var(v) if outer.contains_key(v) => {
                    assigned.insert(v.clone());
                }
                Target::Var(v) if inner.contains(v) => {}
                _ => *heap = true,
            },
            Stmt::VarDecl { name, .. } => {
                if outer.contains_key(name) {
                    assigned.insert(name.clone());
                }
            }
            Stmt::Await(_) => *heap = true,
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                loop_effects(then_branch, outer, inner, assigned, heap);
                if let Some(e) = else_branch {
                    loop_effects(e, outer, inner, assigned, heap);
                }
            }
            Stmt::While { body, .. } | Stmt::Block(body) => {
                loop_effects(body, outer, inner, assigned, heap)
            }
            _ => {}
        }
    }
}
