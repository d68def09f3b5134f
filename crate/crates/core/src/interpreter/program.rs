//! Method bodies flattened to jump-based instruction lists.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::abs_ir::{AbsModel, Expr, Rhs, Stmt, Target, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Unit,
    Null,
    Obj(usize),
    Fut(usize),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(true) => write!(f, "True"),
            Value::Bool(false) => write!(f, "False"),
            Value::Unit => write!(f, "unit"),
            Value::Null => write!(f, "null"),
            Value::Obj(k) => write!(f, "o{k}"),
            Value::Fut(k) => write!(f, "f{k}"),
        }
    }
}

/// Integers and booleans as JSON scalars, references as strings.
impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(n) => s.serialize_i64(*n),
            Value::Bool(b) => s.serialize_bool(*b),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

pub fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        Type::Unit => Value::Unit,
        _ => Value::Null,
    }
}

#[derive(Debug, Clone)]
pub enum Instr {
    Decl {
        slot: usize,
        init: Option<Rhs>,
    },
    Assign {
        target: Target,
        value: Rhs,
    },
    Eval(Rhs),
    Await(Vec<Expr>),
    /// Falls through when `cond` holds, otherwise jumps.
    Branch {
        cond: Expr,
        else_to: usize,
    },
    Jump(usize),
    Return(Rhs),
}

#[derive(Debug)]
pub struct CMethod {
    pub class: usize,
    pub name: Arc<str>,
    pub n_params: usize,
    pub slots: HashMap<String, usize>,
    pub slot_defaults: Vec<Value>,
    pub code: Vec<Instr>,
}

impl CMethod {
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.slots.get(name).copied()
    }
}

#[derive(Debug)]
pub struct CClass {
    pub name: Arc<str>,
    pub fields: Vec<(String, Type)>,
    pub field_index: HashMap<String, usize>,
    pub n_params: usize,
    pub inits: Vec<Option<Expr>>,
    pub methods: HashMap<String, usize>,
}

impl CClass {
    pub fn field(&self, name: &str) -> Option<usize> {
        self.field_index.get(name).copied()
    }
}

#[derive(Debug)]
pub struct Program {
    pub model: AbsModel,
    pub classes: Vec<CClass>,
    pub class_index: HashMap<String, usize>,
    pub methods: Vec<CMethod>,
}

struct Compiler {
    slots: HashMap<String, usize>,
    defaults: Vec<Value>,
    code: Vec<Instr>,
}

impl Compiler {
    fn slot(&mut self, name: &str, ty: &Type) -> usize {
        if let Some(&k) = self.slots.get(name) {
            return k;
        }
        let k = self.defaults.len();
        self.slots.insert(name.to_string(), k);
        self.defaults.push(default_value(ty));
        k
    }

    /// A synchronous call becomes an asynchronous call into a hidden
    /// future slot followed by a blocking get.
    fn lower(&mut self, r: &Rhs) -> Rhs {
        match r {
            Rhs::SyncCall {
                callee,
                method,
                args,
            } => {
                let name = format!("$sync{}", self.code.len());
                let slot = self.slot(&name, &Type::Unit);
                self.defaults[slot] = Value::Null;
                self.code.push(Instr::Decl {
                    slot,
                    init: Some(Rhs::AsyncCall {
                        callee: callee.clone(),
                        method: method.clone(),
                        args: args.clone(),
                    }),
                });
                Rhs::Get(Expr::Var(name))
            }
            _ => r.clone(),
        }
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            match s {
                Stmt::VarDecl { ty, name, init } => {
                    let init = init.as_ref().map(|r| self.lower(r));
                    let slot = self.slot(name, ty);
                    self.code.push(Instr::Decl { slot, init });
                }
                Stmt::Assign { target, value } => {
                    let value = self.lower(value);
                    self.code.push(Instr::Assign {
                        target: target.clone(),
                        value,
                    });
                }
                Stmt::Rhs(r) => {
                    let r = self.lower(r);
                    self.code.push(Instr::Eval(r));
                }
                Stmt::Return(r) => {
                    let r = self.lower(r);
                    self.code.push(Instr::Return(r));
                }
                Stmt::Await(g) => self.code.push(Instr::Await(g.clone())),
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let branch = self.code.len();
                    self.code.push(Instr::Jump(0));
                    self.stmts(then_branch);
                    let jump = self.code.len();
                    self.code.push(Instr::Jump(0));
                    let else_to = self.code.len();
                    if let Some(e) = else_branch {
                        self.stmts(e);
                    }
                    let end = self.code.len();
                    self.code[branch] = Instr::Branch {
                        cond: cond.clone(),
                        else_to,
                    };
                    self.code[jump] = Instr::Jump(end);
                }
                Stmt::While { cond, body, .. } => {
                    let head = self.code.len();
                    self.code.push(Instr::Jump(0));
                    self.stmts(body);
                    self.code.push(Instr::Jump(head));
                    self.code[head] = Instr::Branch {
                        cond: cond.clone(),
                        else_to: self.code.len(),
                    };
                }
                Stmt::Block(b) => self.stmts(b),
                Stmt::Skip => {}
            }
        }
    }
}

impl Program {
    pub fn compile(model: &AbsModel) -> Program {
        let mut classes = Vec::new();
        let mut methods = Vec::new();
        for (ci, c) in model.classes.iter().enumerate() {
            let fields: Vec<(String, Type)> = c
                .field_types()
                .into_iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect();
            let field_index = fields
                .iter()
                .enumerate()
                .map(|(k, (n, _))| (n.clone(), k))
                .collect();
            let inits = c
                .params
                .iter()
                .map(|_| None)
                .chain(c.fields.iter().map(|f| f.init.clone()))
                .collect();
            let mut index = HashMap::new();
            for m in &c.methods {
                let mut comp = Compiler {
                    slots: HashMap::new(),
                    defaults: Vec::new(),
                    code: Vec::new(),
                };
                for p in &m.sig.params {
                    comp.slot(&p.name, &p.ty);
                }
                comp.stmts(&m.body);
                index.insert(m.sig.name.clone(), methods.len());
                methods.push(CMethod {
                    class: ci,
                    name: Arc::from(m.sig.name.as_str()),
                    n_params: m.sig.params.len(),
                    slots: comp.slots,
                    slot_defaults: comp.defaults,
                    code: comp.code,
                });
            }
            classes.push(CClass {
                name: Arc::from(c.name.as_str()),
                fields,
                field_index,
                n_params: c.params.len(),
                inits,
                methods: index,
            });
        }
        let class_index = classes
            .iter()
            .enumerate()
            .map(|(k, c)| (c.name.to_string(), k))
            .collect();
        Program {
            model: model.clone(),
            classes,
            class_index,
            methods,
        }
    }
}
