//! Proof obligations and their contracts.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::abs_ir::{AbsModel, BinOp, Class, Expr, MethodSig, SpecKind, Stmt, Type, UnOp};

use super::logic::{Formula, Modality, Op, Sort, Term};
use super::ProverError;

/// Parameter contract of a callee as seen by callers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalleeContract {
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub pre: Formula,
    pub post: Formula,
}

/// `(inv, M, φ, ψ)`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehavioralContract {
    pub inv: Formula,
    /// Keyed by `Type.method`, where `Type` is the static type of the callee.
    pub callees: BTreeMap<String, CalleeContract>,
    pub post: Formula,
    pub stmt_post: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoKind {
    MethodContract,
    ClassInitialization,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofObligation {
    pub kind: PoKind,
    pub class: String,
    /// `<init>` for class initialization.
    pub method: String,
    pub antecedent: Formula,
    pub body: Vec<Stmt>,
    pub contract: BehavioralContract,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub fields: Vec<(String, Type)>,
    /// Creation preconditions per class, over the class parameters.
    pub constructors: BTreeMap<String, CalleeContract>,
    /// Model function result sorts.
    pub functions: BTreeMap<String, Sort>,
}

impl ProofObligation {
    pub fn name(&self) -> String {
        format!("{}.{}", self.class, self.method)
    }

    /// The obligation as a single formula.
    pub fn formula(&self) -> Formula {
        match self.kind {
            PoKind::MethodContract => Formula::implies(
                self.antecedent.clone(),
                Formula::Modality(Box::new(Modality {
                    body: self.body.clone(),
                    contract: self.contract.clone(),
                })),
            ),
            PoKind::ClassInitialization => {
                Formula::implies(self.antecedent.clone(), self.contract.inv.clone())
            }
        }
    }
}

impl fmt::Display for ProofObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PoKind::MethodContract => write!(
                f,
                "{}: {} -> [body ⊩ {}, M, {}, {}]",
                self.name(),
                self.antecedent,
                self.contract.inv,
                self.contract.post,
                self.contract.stmt_post
            ),
            PoKind::ClassInitialization => write!(
                f,
                "{}: {} -> {}",
                self.name(),
                self.antecedent,
                self.contract.inv
            ),
        }
    }
}

/// How bare field names and `this.f` are read.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum FieldMode {
    /// `select(heap, f)`
    Heap,
    /// Class parameters as program variables, for creation preconditions.
    Params,
}

/// Lowers model expressions to terms.
pub(crate) struct Lower<'a> {
    pub fields: &'a [(String, Type)],
    pub functions: &'a BTreeMap<String, Sort>,
    pub locals: &'a BTreeMap<String, Type>,
    pub mode: FieldMode,
}

impl Lower<'_> {
    fn field(&self, name: &str) -> Option<Term> {
        let (_, ty) = self.fields.iter().find(|(n, _)| n == name)?;
        let sort = Sort::of_type(ty);
        Some(match self.mode {
            FieldMode::Heap => Term::select(Term::heap(), name, sort),
            FieldMode::Params => Term::pvar(name, sort),
        })
    }

    pub fn term(&self, e: &Expr) -> Result<Term, ProverError> {
        Ok(match e {
            Expr::Int(v) => Term::Int(*v),
            Expr::Bool(b) => Term::Bool(*b),
            Expr::Unit => Term::Unit,
            Expr::Null => Term::Null,
            Expr::This => Term::pvar("this", Sort::Ref),
            Expr::Var(v) => match self.locals.get(v) {
                Some(ty) => Term::pvar(v, Sort::of_type(ty)),
                None => self
                    .field(v)
                    .ok_or_else(|| ProverError::UnknownSymbol(v.clone()))?,
            },
            Expr::Field(f) => self
                .field(f)
                .ok_or_else(|| ProverError::UnknownSymbol(format!("this.{f}")))?,
            Expr::Unary(op, inner) => {
                let op = match op {
                    UnOp::Not => Op::Not,
                    UnOp::Neg => Op::Neg,
                };
                Term::app(op, vec![self.term(inner)?])
            }
            Expr::Binary(op, a, b) => Term::bin(lower_op(*op), self.term(a)?, self.term(b)?),
            Expr::Cond(c, a, b) => Term::Ite(
                Box::new(self.term(c)?),
                Box::new(self.term(a)?),
                Box::new(self.term(b)?),
            ),
            Expr::Apply(f, args) if f == "valueOf" && args.len() == 1 => {
                Term::val(self.term(&args[0])?)
            }
            Expr::Apply(f, args) => {
                let sort = self
                    .functions
                    .get(f)
                    .ok_or_else(|| ProverError::UnknownSymbol(f.clone()))?;
                let args = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<_, _>>()?;
                Term::Fun(f.clone(), sort.clone(), args)
            }
        })
    }

    pub fn formula(&self, e: &Expr) -> Result<Formula, ProverError> {
        Ok(Formula::atom(self.term(e)?))
    }

    pub fn conj<'e>(&self, es: impl Iterator<Item = &'e Expr>) -> Result<Formula, ProverError> {
        Ok(Formula::and(
            es.map(|e| self.formula(e)).collect::<Result<_, _>>()?,
        ))
    }
}

pub(crate) fn lower_op(op: BinOp) -> Op {
    match op {
        BinOp::Add => Op::Add,
        BinOp::Sub => Op::Sub,
        BinOp::Mul => Op::Mul,
        BinOp::Div => Op::Div,
        BinOp::Mod => Op::Mod,
        BinOp::Lt => Op::Lt,
        BinOp::Gt => Op::Gt,
        BinOp::Le => Op::Le,
        BinOp::Ge => Op::Ge,
        BinOp::Eq => Op::Eq,
        BinOp::Ne => Op::Ne,
        BinOp::And => Op::And,
        BinOp::Or => Op::Or,
    }
}

fn field_list(c: &Class) -> Vec<(String, Type)> {
    c.field_types()
        .into_iter()
        .map(|(n, t)| (n.to_string(), t.clone()))
        .collect()
}

fn param_locals(sig: &MethodSig, with_result: bool) -> BTreeMap<String, Type> {
    let mut m: BTreeMap<String, Type> = sig
        .params
        .iter()
        .map(|p| (p.name.clone(), p.ty.clone()))
        .collect();
    if with_result {
        m.insert("result".into(), sig.ret.clone());
    }
    m
}

fn callee_contract(
    sig: &MethodSig,
    functions: &BTreeMap<String, Sort>,
) -> Result<CalleeContract, ProverError> {
    let pre_locals = param_locals(sig, false);
    let post_locals = param_locals(sig, true);
    let lower = |locals| Lower {
        fields: &[],
        functions,
        locals,
        mode: FieldMode::Heap,
    };
    Ok(CalleeContract {
        params: sig
            .params
            .iter()
            .map(|p| (p.name.clone(), Sort::of_type(&p.ty)))
            .collect(),
        ret: Sort::of_type(&sig.ret),
        pre: lower(&pre_locals).conj(sig.specs_of(SpecKind::Requires))?,
        post: lower(&post_locals).conj(sig.specs_of(SpecKind::Ensures))?,
    })
}

/// Callee contracts for every method reachable through an interface or a
/// class type. Interface annotations take precedence.
pub fn method_contract_map(
    model: &AbsModel,
) -> Result<BTreeMap<String, CalleeContract>, ProverError> {
    let functions = function_sorts(model);
    let mut map = BTreeMap::new();
    for i in &model.interfaces {
        let mut names: Vec<&str> = Vec::new();
        collect_interface_methods(model, &i.name, &mut names);
        for m in names {
            if let Some(sig) = model.method_sig(&i.name, m) {
                map.insert(
                    format!("{}.{}", i.name, m),
                    callee_contract(sig, &functions)?,
                );
            }
        }
    }
    for c in &model.classes {
        for m in &c.methods {
            let key = format!("{}.{}", c.name, m.sig.name);
            if map.contains_key(&key) {
                continue;
            }
            let sig = model.interface_sig(c, &m.sig.name).unwrap_or(&m.sig);
            map.insert(key, callee_contract(sig, &functions)?);
        }
    }
    Ok(map)
}

fn collect_interface_methods<'a>(model: &'a AbsModel, iface: &str, out: &mut Vec<&'a str>) {
    if let Some(i) = model.interface(iface) {
        for m in &i.methods {
            if !out.contains(&m.name.as_str()) {
                out.push(&m.name);
            }
        }
        for p in &i.extends {
            collect_interface_methods(model, p, out);
        }
    }
}

pub(crate) fn function_sorts(model: &AbsModel) -> BTreeMap<String, Sort> {
    model
        .functions
        .iter()
        .map(|f| (f.name.clone(), Sort::of_type(&f.ret)))
        .collect()
}

/// Creation preconditions: class `Requires` over the class parameters.
/// Fields that are not parameters are read as their initial values.
fn constructor_contracts(
    model: &AbsModel,
) -> Result<BTreeMap<String, CalleeContract>, ProverError> {
    let functions = function_sorts(model);
    let mut out = BTreeMap::new();
    for c in &model.classes {
        let params: Vec<(String, Type)> = c
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect();
        let empty = BTreeMap::new();
        let lower = Lower {
            fields: &params,
            functions: &functions,
            locals: &empty,
            mode: FieldMode::Params,
        };
        let inits = field_inits(c);
        let pre = c
            .specs_of(SpecKind::Requires)
            .map(|e| {
                let e = e.map_vars(&|v| inits.get(v).cloned());
                let e = replace_fields(&e, &inits);
                lower.formula(&e)
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(
            c.name.clone(),
            CalleeContract {
                params: params
                    .iter()
                    .map(|(n, t)| (n.clone(), Sort::of_type(t)))
                    .collect(),
                ret: Sort::Ref,
                pre: Formula::and(pre),
                post: Formula::True,
            },
        );
    }
    Ok(out)
}

fn replace_fields(e: &Expr, inits: &BTreeMap<String, Expr>) -> Expr {
    match e {
        Expr::Field(f) => inits.get(f).cloned().unwrap_or_else(|| e.clone()),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(replace_fields(a, inits))),
        Expr::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(replace_fields(a, inits)),
            Box::new(replace_fields(b, inits)),
        ),
        Expr::Cond(c, a, b) => Expr::Cond(
            Box::new(replace_fields(c, inits)),
            Box::new(replace_fields(a, inits)),
            Box::new(replace_fields(b, inits)),
        ),
        Expr::Apply(f, args) => Expr::Apply(
            f.clone(),
            args.iter().map(|a| replace_fields(a, inits)).collect(),
        ),
        _ => e.clone(),
    }
}

/// Initial values of the non-parameter fields.
fn field_inits(c: &Class) -> BTreeMap<String, Expr> {
    c.fields
        .iter()
        .map(|f| {
            let v = f.init.clone().unwrap_or_else(|| default_value(&f.ty));
            (f.name.clone(), v)
        })
        .collect()
}

pub(crate) fn default_value(ty: &Type) -> Expr {
    match ty {
        Type::Int => Expr::Int(0),
        Type::Bool => Expr::Bool(false),
        Type::Unit => Expr::Unit,
        _ => Expr::Null,
    }
}

/// One method-contract obligation per method and one initialization
/// obligation per class, in declaration order.
pub fn generate_obligations(model: &AbsModel) -> Result<Vec<ProofObligation>, ProverError> {
    let callees = method_contract_map(model)?;
    let constructors = constructor_contracts(model)?;
    let functions = function_sorts(model);
    let mut out = Vec::new();
    for c in &model.classes {
        let fields = field_list(c);
        let empty = BTreeMap::new();
        let heap_lower = Lower {
            fields: &fields,
            functions: &functions,
            locals: &empty,
            mode: FieldMode::Heap,
        };
        let inv = heap_lower.conj(c.specs_of(SpecKind::ObjInv))?;

        let mut init_facts = vec![heap_lower.conj(c.specs_of(SpecKind::Requires))?];
        for f in &c.fields {
            let value = f.init.clone().unwrap_or_else(|| default_value(&f.ty));
            init_facts.push(Formula::eq(
                Term::select(Term::heap(), &f.name, Sort::of_type(&f.ty)),
                heap_lower.term(&value)?,
            ));
        }
        out.push(ProofObligation {
            kind: PoKind::ClassInitialization,
            class: c.name.clone(),
            method: "<init>".into(),
            antecedent: Formula::and(init_facts),
            body: Vec::new(),
            contract: BehavioralContract {
                inv: inv.clone(),
                callees: callees.clone(),
                post: Formula::True,
                stmt_post: Formula::True,
            },
            params: Vec::new(),
            ret: Type::Unit,
            fields: fields.clone(),
            constructors: constructors.clone(),
            functions: functions.clone(),
        });

        for m in &c.methods {
            let iface = model.interface_sig(c, &m.sig.name);
            let pre_locals = param_locals(&m.sig, false);
            let post_locals = param_locals(&m.sig, true);
            let lower = |locals| Lower {
                fields: &fields,
                functions: &functions,
                locals,
                mode: FieldMode::Heap,
            };
            let requires = iface
                .into_iter()
                .flat_map(|s| s.specs_of(SpecKind::Requires))
                .chain(m.sig.specs_of(SpecKind::Requires));
            let ensures = iface
                .into_iter()
                .flat_map(|s| s.specs_of(SpecKind::Ensures))
                .chain(m.sig.specs_of(SpecKind::Ensures));
            let pre = lower(&pre_locals).conj(requires)?;
            let post = lower(&post_locals).conj(ensures)?;
            out.push(ProofObligation {
                kind: PoKind::MethodContract,
                class: c.name.clone(),
                method: m.sig.name.clone(),
                antecedent: Formula::and(vec![inv.clone(), pre]),
                body: m.body.clone(),
                contract: BehavioralContract {
                    inv: inv.clone(),
                    callees: callees.clone(),
                    post,
                    stmt_post: Formula::True,
                },
                params: m
                    .sig
                    .params
                    .iter()
                    .map(|p| (p.name.clone(), p.ty.clone()))
                    .collect(),
                ret: m.sig.ret.clone(),
                fields: fields.clone(),
                constructors: constructors.clone(),
                functions: functions.clone(),
            });
        }
    }
    Ok(out)
}
