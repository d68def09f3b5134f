use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Type {
    Int,
    Bool,
    Unit,
    Fut(Box<Type>),
    /// Interface (or class) name.
    Named(String),
}

impl Type {
    pub fn fut(inner: Type) -> Type {
        Type::Fut(Box::new(inner))
    }

    pub fn named(n: &str) -> Type {
        Type::Named(n.to_string())
    }

    pub fn is_fut(&self) -> bool {
        matches!(self, Type::Fut(_))
    }

    pub fn fut_inner(&self) -> Option<&Type> {
        match self {
            Type::Fut(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("Int"),
            Type::Bool => f.write_str("Bool"),
            Type::Unit => f.write_str("Unit"),
            Type::Fut(t) => write!(f, "Fut<{t}>"),
            Type::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "<" => BinOp::Lt,
            ">" => BinOp::Gt,
            "<=" => BinOp::Le,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    Not,
    Neg,
}

/// Pure expressions. `result` and bare field names are plain `Var`s and are
/// resolved by scope.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Unit,
    Null,
    This,
    Var(String),
    /// `this.f`
    Field(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Function application, including `valueOf(f)` in specifications.
    Apply(String, Vec<Expr>),
}

impl Expr {
    pub fn var(n: &str) -> Expr {
        Expr::Var(n.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn cond(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Cond(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn value_of(fut: &str) -> Expr {
        Expr::Apply("valueOf".into(), vec![Expr::var(fut)])
    }

    /// Visits every sub-expression, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Cond(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
            Expr::Apply(_, args) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        });
        out
    }

    /// Renames variables (not fields) according to `f`.
    pub fn map_vars(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            Expr::Cond(c, a, b) => Expr::Cond(
                Box::new(c.map_vars(f)),
                Box::new(a.map_vars(f)),
                Box::new(b.map_vars(f)),
            ),
            Expr::Apply(n, args) => {
                Expr::Apply(n.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
            _ => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Rhs {
    Expr(Expr),
    AsyncCall {
        callee: Expr,
        method: String,
        args: Vec<Expr>,
    },
    /// Synchronous call sugar; removed by normalization.
    SyncCall {
        callee: Expr,
        method: String,
        args: Vec<Expr>,
    },
    Get(Expr),
    New {
        class: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Target {
    Var(String),
    Field(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Stmt {
    VarDecl {
        ty: Type,
        name: String,
        init: Option<Rhs>,
    },
    Assign {
        target: Target,
        value: Rhs,
    },
    /// Expression statement: a bare call, get, or expression.
    Rhs(Rhs),
    /// `await f1? & f2?`
    Await(Vec<Expr>),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        invariants: Vec<Expr>,
        body: Vec<Stmt>,
    },
    Return(Rhs),
    Skip,
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpecKind {
    ObjInv,
    Ensures,
    Requires,
    WhileInv,
}

impl SpecKind {
    pub fn name(self) -> &'static str {
        match self {
            SpecKind::ObjInv => "ObjInv",
            SpecKind::Ensures => "Ensures",
            SpecKind::Requires => "Requires",
            SpecKind::WhileInv => "WhileInv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Spec {
    pub kind: SpecKind,
    pub expr: Expr,
}

impl Spec {
    pub fn new(kind: SpecKind, expr: Expr) -> Spec {
        Spec { kind, expr }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Param {
    pub ty: Type,
    pub name: String,
}

impl Param {
    pub fn new(ty: Type, name: &str) -> Param {
        Param {
            ty,
            name: name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MethodSig {
    pub specs: Vec<Spec>,
    pub ret: Type,
    pub name: String,
    pub params: Vec<Param>,
}

impl MethodSig {
    pub fn specs_of(&self, kind: SpecKind) -> impl Iterator<Item = &Expr> {
        self.specs
            .iter()
            .filter(move |s| s.kind == kind)
            .map(|s| &s.expr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Interface {
    pub name: String,
    pub extends: Vec<String>,
    pub methods: Vec<MethodSig>,
}

impl Interface {
    pub fn method(&self, name: &str) -> Option<&MethodSig> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FieldDecl {
    pub ty: Type,
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Method {
    pub sig: MethodSig,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Class {
    pub specs: Vec<Spec>,
    pub name: String,
    pub params: Vec<Param>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<Method>,
}

impl Class {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.sig.name == name)
    }

    pub fn specs_of(&self, kind: SpecKind) -> impl Iterator<Item = &Expr> {
        self.specs
            .iter()
            .filter(move |s| s.kind == kind)
            .map(|s| &s.expr)
    }

    /// Class parameters followed by declared fields.
    pub fn field_types(&self) -> Vec<(&str, &Type)> {
        self.params
            .iter()
            .map(|p| (p.name.as_str(), &p.ty))
            .chain(self.fields.iter().map(|f| (f.name.as_str(), &f.ty)))
            .collect()
    }

    pub fn field_type(&self, name: &str) -> Option<&Type> {
        self.field_types()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DataDecl {
    pub name: String,
    pub ctors: Vec<(String, Vec<Type>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FunDef {
    pub ret: Type,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AbsModel {
    pub module: String,
    pub data_decls: Vec<DataDecl>,
    pub functions: Vec<FunDef>,
    pub interfaces: Vec<Interface>,
    pub classes: Vec<Class>,
    pub main_block: Vec<Stmt>,
}

impl AbsModel {
    pub fn empty(module: &str) -> AbsModel {
        AbsModel {
            module: module.to_string(),
            data_decls: Vec::new(),
            functions: Vec::new(),
            interfaces: Vec::new(),
            classes: Vec::new(),
            main_block: Vec::new(),
        }
    }

    /// The `Spec` datatype used by annotations.
    pub fn spec_data_decl() -> DataDecl {
        DataDecl {
            name: "Spec".into(),
            ctors: ["ObjInv", "Ensures", "Requires", "WhileInv"]
                .iter()
                .map(|c| (c.to_string(), vec![Type::Bool]))
                .collect(),
        }
    }

    pub fn interface(&self, name: &str) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&Class> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Signature of `method` as seen through static type `ty` (an interface,
    /// or a class when the name is not an interface).
    pub fn method_sig(&self, ty: &str, method: &str) -> Option<&MethodSig> {
        if let Some(i) = self.interface(ty) {
            if let Some(m) = i.method(method) {
                return Some(m);
            }
            for parent in &i.extends {
                if let Some(m) = self.method_sig(parent, method) {
                    return Some(m);
                }
            }
            return None;
        }
        self.class(ty)
            .and_then(|c| c.method(method))
            .map(|m| &m.sig)
    }

    /// Interface-level signature of a class method, if any implemented
    /// interface declares it.
    pub fn interface_sig(&self, class: &Class, method: &str) -> Option<&MethodSig> {
        class
            .implements
            .iter()
            .find_map(|i| self.interface(i).and_then(|_| self.method_sig(i, method)))
    }

    /// Whether class `c` is a subtype of interface or class `ty`.
    pub fn implements(&self, c: &str, ty: &str) -> bool {
        if c == ty {
            return true;
        }
        if let Some(class) = self.class(c) {
            return class.implements.iter().any(|i| self.extends(i, ty));
        }
        self.extends(c, ty)
    }

    fn extends(&self, iface: &str, ty: &str) -> bool {
        iface == ty
            || self
                .interface(iface)
                .is_some_and(|i| i.extends.iter().any(|p| self.extends(p, ty)))
    }

    /// Classes whose instances may be referenced through static type `ty`.
    pub fn implementors(&self, ty: &str) -> Vec<&Class> {
        self.classes
            .iter()
            .filter(|c| self.implements(&c.name, ty))
            .collect()
    }
}
