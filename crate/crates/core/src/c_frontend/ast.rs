use std::fmt;
use std::hash::{Hash, Hasher};

use crate::diagnostics::Pos;

/// Source location attached to AST nodes. Never participates in structural
/// equality, so re-parsing printed output compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc(pub Pos);

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Loc {}
impl Hash for Loc {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CProgram {
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<CFunction>,
    pub model_fn_defs: Vec<ModelFnDef>,
}

impl CProgram {
    pub fn function(&self, name: &str) -> Option<&CFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }
}

/// Text of an `ABS def` annotation, whitespace-collapsed, without the
/// leading `ABS` marker (starts with `def`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFnDef {
    pub text: String,
    pub name: String,
    pub arity: usize,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseType {
    Int,
    Void,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CType {
    pub base: BaseType,
    pub is_const: bool,
    pub pointer_depth: u8,
    pub array_dims: Vec<Option<i64>>,
}

impl CType {
    pub fn int() -> Self {
        CType {
            base: BaseType::Int,
            is_const: false,
            pointer_depth: 0,
            array_dims: Vec::new(),
        }
    }

    pub fn const_int() -> Self {
        CType {
            is_const: true,
            ..CType::int()
        }
    }

    pub fn void() -> Self {
        CType {
            base: BaseType::Void,
            ..CType::int()
        }
    }

    pub fn is_plain_int(&self) -> bool {
        self.base == BaseType::Int && self.pointer_depth == 0 && self.array_dims.is_empty()
    }

    pub fn is_void(&self) -> bool {
        self.base == BaseType::Void && self.pointer_depth == 0 && self.array_dims.is_empty()
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const {
            f.write_str("const ")?;
        }
        match &self.base {
            BaseType::Int => f.write_str("int")?,
            BaseType::Void => f.write_str("void")?,
            BaseType::Other(s) => f.write_str(s)?,
        }
        for _ in 0..self.pointer_depth {
            f.write_str(" *")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: CType,
    pub init: Option<CExpr>,
    pub strong_invariant: Option<SpecExpr>,
    pub loc: Loc,
}

impl GlobalDecl {
    /// Initial value; globals without initializer start at 0.
    pub fn initial(&self) -> i64 {
        match &self.init {
            Some(CExpr {
                kind: CExprKind::IntLit(v),
                ..
            }) => *v,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: CType,
    pub loc: Loc,
}

impl Param {
    pub fn is_const(&self) -> bool {
        self.ty.is_const
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Contract {
    pub requires: Vec<SpecExpr>,
    pub ensures: Vec<SpecExpr>,
}

impl Contract {
    pub fn is_empty(&self) -> bool {
        self.requires.is_empty() && self.ensures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub return_ty: CType,
    pub contract: Option<Contract>,
    pub body: Vec<CStmt>,
    pub loc: Loc,
}

impl CFunction {
    pub fn returns_int(&self) -> bool {
        !self.return_ty.is_void()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CStmt {
    pub kind: CStmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CStmtKind {
    Expr(CExpr),
    Decl {
        name: String,
        ty: CType,
        init: Option<CExpr>,
    },
    Return(Option<CExpr>),
    If {
        cond: CExpr,
        then_branch: Box<CStmt>,
        else_branch: Option<Box<CStmt>>,
    },
    While {
        cond: CExpr,
        body: Box<CStmt>,
        invariants: Vec<SpecExpr>,
    },
    Compound(Vec<CStmt>),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    /// Helper-name fragment used by the extractor (`op_plus_fut_fut`).
    pub fn helper_name(self) -> &'static str {
        match self {
            BinOp::Add => "plus",
            BinOp::Sub => "minus",
            BinOp::Mul => "times",
            BinOp::Div => "div",
            BinOp::Lt => "lt",
            BinOp::Gt => "gt",
            BinOp::Le => "le",
            BinOp::Ge => "ge",
            BinOp::Eq => "eq",
            BinOp::Ne => "neq",
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div => 5,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 3,
            BinOp::Eq | BinOp::Ne => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
}

impl LogicOp {
    pub fn symbol(self) -> &'static str {
        match self {
            LogicOp::And => "&&",
            LogicOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CExpr {
    pub kind: CExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CExprKind {
    IntLit(i64),
    Var(String),
    Assign {
        target: String,
        value: Box<CExpr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<CExpr>,
        rhs: Box<CExpr>,
    },
    Logical {
        op: LogicOp,
        lhs: Box<CExpr>,
        rhs: Box<CExpr>,
    },
    Call {
        name: String,
        args: Vec<CExpr>,
    },
    /// Something the lenient parser accepted but the supported fragment
    /// does not contain (unary operators, casts, compound assignment, ...).
    /// `construct` is the printable operator/keyword.
    Unsupported {
        construct: String,
        operands: Vec<CExpr>,
    },
}

impl CExpr {
    pub fn new(kind: CExprKind, pos: Pos) -> Self {
        CExpr {
            kind,
            loc: Loc(pos),
        }
    }

    pub fn pos(&self) -> Pos {
        self.loc.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecBinOp {
    Arith(BinOp),
    And,
    Or,
    Implies,
}

/// ACSL-side expression: boolean/arithmetic terms over parameters, globals,
/// `\result` and model functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecExpr {
    Int(i64),
    Bool(bool),
    Var(String),
    Result,
    Not(Box<SpecExpr>),
    Binary {
        op: SpecBinOp,
        lhs: Box<SpecExpr>,
        rhs: Box<SpecExpr>,
    },
    Call {
        name: String,
        args: Vec<SpecExpr>,
    },
}

impl SpecExpr {
    pub fn binary(op: SpecBinOp, lhs: SpecExpr, rhs: SpecExpr) -> Self {
        SpecExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Every identifier read (excluding function names and `\result`).
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            SpecExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            SpecExpr::Not(e) => e.collect_vars(out),
            SpecExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            SpecExpr::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
            SpecExpr::Int(_) | SpecExpr::Bool(_) | SpecExpr::Result => {}
        }
    }

    pub fn mentions_result(&self) -> bool {
        match self {
            SpecExpr::Result => true,
            SpecExpr::Not(e) => e.mentions_result(),
            SpecExpr::Binary { lhs, rhs, .. } => lhs.mentions_result() || rhs.mentions_result(),
            SpecExpr::Call { args, .. } => args.iter().any(SpecExpr::mentions_result),
            _ => false,
        }
    }
}
