//! Lenient recursive-descent parser for C translation units.
//!
//! The parser accepts somewhat more than the supported fragment (pointers,
//! casts, unary operators, ...) so that `validate_subset` can report those
//! constructs precisely instead of failing with a generic syntax error.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::spec::{parse_annotation, token_text, Clause, LocatedClause};
use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

/// Result of parsing: the program plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub program: CProgram,
    pub warnings: Vec<Diagnostic>,
}

const DECL_WORDS: &[&str] = &[
    "const", "volatile", "int", "void", "char", "short", "long", "float", "double", "signed",
    "unsigned", "static", "extern", "inline", "register", "auto", "_Bool", "struct", "union",
    "enum",
];

const REJECTED_STMTS: &[&str] = &[
    "for", "do", "switch", "break", "continue", "goto", "case", "default", "typedef",
];

pub fn parse(src: &str) -> Result<Parsed, Diagnostic> {
    let toks = lex(src, Pos::new(1, 1), true)?;
    let mut p = Parser {
        toks,
        i: 0,
        warnings: Vec::new(),
    };
    let program = p.translation_unit()?;
    Ok(Parsed {
        program,
        warnings: p.warnings,
    })
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    warnings: Vec<Diagnostic>,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagnosticKind::Syntax, pos, msg)
}

fn subset(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagnosticKind::SubsetViolation, pos, msg)
}

impl Parser {
    fn tok(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn tok_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) {
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.tok(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.tok(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        token_text(&self.toks[self.i])
    }

    fn expect_punct(&mut self, p: &str) -> Result<Pos, Diagnostic> {
        let pos = self.pos();
        if self.eat_punct(p) {
            Ok(pos)
        } else {
            Err(syntax(
                pos,
                format!("expected `{p}`, found `{}`", self.describe()),
            ))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), Diagnostic> {
        let pos = self.pos();
        match self.tok().clone() {
            Tok::Ident(s) if !DECL_WORDS.contains(&s.as_str()) && !s.starts_with('\\') => {
                self.bump();
                Ok((s, pos))
            }
            _ => Err(syntax(
                pos,
                format!("expected identifier, found `{}`", self.describe()),
            )),
        }
    }

    fn take_annotations(&mut self) -> Result<Vec<LocatedClause>, Diagnostic> {
        let mut out = Vec::new();
        while let Tok::Annot { text, start } = self.tok().clone() {
            self.bump();
            out.extend(parse_annotation(&text, start)?);
        }
        Ok(out)
    }

    fn warn_ignored(&mut self, clause: &LocatedClause) {
        if let Clause::Ignored(what) = &clause.clause {
            self.warnings.push(Diagnostic::warning(
                DiagnosticKind::Unsupported,
                clause.pos,
                format!("`{what}` clause is parsed and ignored"),
            ));
        }
    }

    fn translation_unit(&mut self) -> Result<CProgram, Diagnostic> {
        let mut program = CProgram {
            globals: Vec::new(),
            functions: Vec::new(),
            model_fn_defs: Vec::new(),
        };
        let mut invariants: Vec<(SpecExpr, Pos)> = Vec::new();
        let mut contract: Vec<LocatedClause> = Vec::new();
        loop {
            for clause in self.take_annotations()? {
                match clause.clause {
                    Clause::ModelDef(ref text) => {
                        program.model_fn_defs.push(model_def(text, clause.pos)?)
                    }
                    Clause::StrongInvariant(e) => invariants.push((e, clause.pos)),
                    Clause::Requires(_) | Clause::Ensures(_) => contract.push(clause),
                    Clause::LoopInvariant(_) => {
                        return Err(syntax(clause.pos, "loop invariant outside of a loop"))
                    }
                    Clause::Ignored(_) => self.warn_ignored(&clause),
                }
            }
            match self.tok() {
                Tok::Eof => break,
                Tok::Hash => {
                    return Err(subset(
                        self.pos(),
                        "preprocessor directives are not supported",
                    ))
                }
                _ => {}
            }
            self.external_declaration(&mut program, &mut contract)?;
        }
        if let Some(c) = contract.first() {
            return Err(syntax(
                c.pos,
                "function contract is not followed by a function",
            ));
        }
        attach_invariants(&mut program, invariants)?;
        Ok(program)
    }

    fn decl_specifiers(&mut self) -> Result<(CType, Pos), Diagnostic> {
        let pos = self.pos();
        let mut words: Vec<String> = Vec::new();
        let mut is_const = false;
        while let Tok::Ident(w) = self.tok().clone() {
            if !DECL_WORDS.contains(&w.as_str()) {
                break;
            }
            self.bump();
            match w.as_str() {
                "const" => is_const = true,
                "struct" | "union" | "enum" => {
                    return Err(subset(pos, format!("`{w}` types are not supported")))
                }
                _ => words.push(w),
            }
        }
        if words.is_empty() {
            return Err(syntax(
                pos,
                format!("expected a type, found `{}`", self.describe()),
            ));
        }
        let base = match words.join(" ").as_str() {
            "int" | "signed" | "signed int" => BaseType::Int,
            "void" => BaseType::Void,
            other => BaseType::Other(other.to_string()),
        };
        Ok((
            CType {
                base,
                is_const,
                pointer_depth: 0,
                array_dims: Vec::new(),
            },
            pos,
        ))
    }

    fn pointers(&mut self, ty: &mut CType) {
        while self.eat_punct("*") {
            ty.pointer_depth += 1;
            while self.is_word("const") {
                self.bump();
            }
        }
    }

    fn array_dims(&mut self, ty: &mut CType) -> Result<(), Diagnostic> {
        while self.eat_punct("[") {
            let dim = match *self.tok() {
                Tok::Int(v) => {
                    self.bump();
                    Some(v)
                }
                _ => None,
            };
            self.expect_punct("]")?;
            ty.array_dims.push(dim);
        }
        Ok(())
    }

    fn external_declaration(
        &mut self,
        program: &mut CProgram,
        contract: &mut Vec<LocatedClause>,
    ) -> Result<(), Diagnostic> {
        let (base_ty, _) = self.decl_specifiers()?;
        loop {
            let mut ty = base_ty.clone();
            self.pointers(&mut ty);
            let (name, pos) = self.expect_ident()?;
            if self.is_punct("(") {
                return self.function(program, contract, ty, name, pos);
            }
            if let Some(c) = contract.first() {
                return Err(syntax(
                    c.pos,
                    "function contract is not followed by a function",
                ));
            }
            self.array_dims(&mut ty)?;
            let init = if self.eat_punct("=") {
                Some(self.assignment()?)
            } else {
                None
            };
            program.globals.push(GlobalDecl {
                name,
                ty,
                init,
                strong_invariant: None,
                loc: Loc(pos),
            });
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(";")?;
            return Ok(());
        }
    }

    fn function(
        &mut self,
        program: &mut CProgram,
        contract: &mut Vec<LocatedClause>,
        return_ty: CType,
        name: String,
        pos: Pos,
    ) -> Result<(), Diagnostic> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        let only_void = self.is_word("void") && matches!(self.tok_at(1), Tok::Punct(")"));
        if only_void {
            self.bump();
        } else if !self.is_punct(")") {
            loop {
                let (mut ty, ppos) = self.decl_specifiers()?;
                self.pointers(&mut ty);
                let (pname, _) = self.expect_ident()?;
                self.array_dims(&mut ty)?;
                params.push(Param {
                    name: pname,
                    ty,
                    loc: Loc(ppos),
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        for clause in self.take_annotations()? {
            match clause.clause {
                Clause::Requires(_) | Clause::Ensures(_) => contract.push(clause),
                Clause::Ignored(_) => self.warn_ignored(&clause),
                _ => {
                    return Err(syntax(
                        clause.pos,
                        "only requires/ensures clauses may follow a function header",
                    ))
                }
            }
        }
        if self.eat_punct(";") {
            // Prototype: contracts must be written on the definition.
            if let Some(c) = contract.first() {
                return Err(syntax(c.pos, "contracts on prototypes are not supported"));
            }
            return Ok(());
        }
        self.expect_punct("{")?;
        let body = self.block_items()?;
        let taken = std::mem::take(contract);
        let fn_contract = if taken.is_empty() {
            None
        } else {
            let mut c = Contract::default();
            for clause in taken {
                match clause.clause {
                    Clause::Requires(e) => c.requires.push(e),
                    Clause::Ensures(e) => c.ensures.push(e),
                    _ => unreachable!("only contract clauses are queued"),
                }
            }
            Some(c)
        };
        program.functions.push(CFunction {
            name,
            params,
            return_ty,
            contract: fn_contract,
            body,
            loc: Loc(pos),
        });
        Ok(())
    }

    fn starts_declaration(&self) -> bool {
        matches!(self.tok(), Tok::Ident(w) if DECL_WORDS.contains(&w.as_str()))
    }

    /// Parses statements up to and including the closing `}`.
    fn block_items(&mut self) -> Result<Vec<CStmt>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            let annots = self.take_annotations()?;
            if self.is_punct("}") || matches!(self.tok(), Tok::Eof) {
                if let Some(a) = annots.first() {
                    return Err(syntax(a.pos, "annotation is not followed by a statement"));
                }
                self.expect_punct("}")?;
                return Ok(out);
            }
            if self.starts_declaration() {
                if let Some(a) = annots.first() {
                    return Err(syntax(a.pos, "annotation before a declaration"));
                }
                self.local_declaration(&mut out)?;
            } else {
                out.push(self.statement_with(annots)?);
            }
        }
    }

    fn local_declaration(&mut self, out: &mut Vec<CStmt>) -> Result<(), Diagnostic> {
        let (base_ty, _) = self.decl_specifiers()?;
        loop {
            let mut ty = base_ty.clone();
            self.pointers(&mut ty);
            let (name, pos) = self.expect_ident()?;
            self.array_dims(&mut ty)?;
            let init = if self.eat_punct("=") {
                Some(self.assignment()?)
            } else {
                None
            };
            out.push(CStmt {
                kind: CStmtKind::Decl { name, ty, init },
                loc: Loc(pos),
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(())
    }

    fn statement(&mut self) -> Result<CStmt, Diagnostic> {
        let annots = self.take_annotations()?;
        if self.starts_declaration() {
            return Err(subset(
                self.pos(),
                "a declaration is not allowed as the body of if/while; use a block",
            ));
        }
        self.statement_with(annots)
    }

    fn statement_with(&mut self, annots: Vec<LocatedClause>) -> Result<CStmt, Diagnostic> {
        let pos = self.pos();
        let mut invariants = Vec::new();
        for a in annots {
            match a.clause {
                Clause::LoopInvariant(e) if self.is_word("while") => invariants.push(e),
                Clause::LoopInvariant(_) => {
                    return Err(syntax(a.pos, "loop invariant must precede a while loop"))
                }
                Clause::Ignored(_) => self.warn_ignored(&a),
                _ => {
                    return Err(syntax(
                        a.pos,
                        "only loop annotations are allowed inside function bodies",
                    ))
                }
            }
        }
        let stmt = |kind| CStmt {
            kind,
            loc: Loc(pos),
        };
        if let Tok::Ident(w) = self.tok().clone() {
            if REJECTED_STMTS.contains(&w.as_str()) {
                return Err(subset(pos, format!("`{w}` statements are not supported")));
            }
            match w.as_str() {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expression()?;
                    self.expect_punct(")")?;
                    let then_branch = Box::new(self.statement()?);
                    let else_branch = if self.is_word("else") {
                        self.bump();
                        Some(Box::new(self.statement()?))
                    } else {
                        None
                    };
                    return Ok(stmt(CStmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    }));
                }
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expression()?;
                    self.expect_punct(")")?;
                    let body = Box::new(self.statement()?);
                    return Ok(stmt(CStmtKind::While {
                        cond,
                        body,
                        invariants,
                    }));
                }
                "return" => {
                    self.bump();
                    if self.eat_punct(";") {
                        return Ok(stmt(CStmtKind::Return(None)));
                    }
                    let e = self.expression()?;
                    self.expect_punct(";")?;
                    return Ok(stmt(CStmtKind::Return(Some(e))));
                }
                "else" => return Err(syntax(pos, "`else` without matching `if`")),
                _ => {}
            }
        }
        if self.eat_punct("{") {
            return Ok(stmt(CStmtKind::Compound(self.block_items()?)));
        }
        if self.eat_punct(";") {
            return Ok(stmt(CStmtKind::Empty));
        }
        let e = self.expression()?;
        self.expect_punct(";")?;
        Ok(stmt(CStmtKind::Expr(e)))
    }

    fn expression(&mut self) -> Result<CExpr, Diagnostic> {
        let first = self.assignment()?;
        if !self.is_punct(",") {
            return Ok(first);
        }
        let pos = first.pos();
        let mut operands = vec![first];
        while self.eat_punct(",") {
            operands.push(self.assignment()?);
        }
        Ok(unsupported(",", operands, pos))
    }

    fn assignment(&mut self) -> Result<CExpr, Diagnostic> {
        let lhs = self.conditional()?;
        let pos = self.pos();
        let op = match self.tok() {
            Tok::Punct(p)
                if matches!(
                    *p,
                    "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "<<=" | ">>=" | "&=" | "|=" | "^="
                ) =>
            {
                *p
            }
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.assignment()?;
        let lpos = lhs.pos();
        match (op, lhs.kind) {
            ("=", CExprKind::Var(target)) => Ok(CExpr::new(
                CExprKind::Assign {
                    target,
                    value: Box::new(rhs),
                },
                lpos,
            )),
            ("=", kind) => Ok(unsupported(
                "assignment to a non-variable",
                vec![CExpr::new(kind, lpos), rhs],
                pos,
            )),
            (op, kind) => Ok(unsupported(op, vec![CExpr::new(kind, lpos), rhs], pos)),
        }
    }

    fn conditional(&mut self) -> Result<CExpr, Diagnostic> {
        let cond = self.logical(0)?;
        if !self.is_punct("?") {
            return Ok(cond);
        }
        let pos = self.pos();
        self.bump();
        let a = self.expression()?;
        self.expect_punct(":")?;
        let b = self.conditional()?;
        Ok(unsupported("?:", vec![cond, a, b], pos))
    }

    /// Levels: 0 `||`, 1 `&&`, 2 `|`, 3 `^`, 4 `&`, then arithmetic.
    fn logical(&mut self, level: u8) -> Result<CExpr, Diagnostic> {
        const OPS: [&str; 5] = ["||", "&&", "|", "^", "&"];
        if level as usize >= OPS.len() {
            return self.binary(2);
        }
        let mut lhs = self.logical(level + 1)?;
        while self.is_punct(OPS[level as usize]) {
            let pos = self.pos();
            self.bump();
            let rhs = self.logical(level + 1)?;
            let lpos = lhs.pos();
            lhs = match level {
                0 | 1 => CExpr::new(
                    CExprKind::Logical {
                        op: if level == 0 {
                            LogicOp::Or
                        } else {
                            LogicOp::And
                        },
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    lpos,
                ),
                _ => unsupported(OPS[level as usize], vec![lhs, rhs], pos),
            };
        }
        Ok(lhs)
    }

    /// Precedence-climbing over the supported binary operators plus shifts
    /// and `%`, which are parsed only to be rejected.
    fn binary(&mut self, level: u8) -> Result<CExpr, Diagnostic> {
        if level > 5 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let pos = self.pos();
            let p = match self.tok() {
                Tok::Punct(p) => *p,
                _ => break,
            };
            if let Some(op) = c_binop(p) {
                if op.precedence() != level {
                    break;
                }
                self.bump();
                let rhs = self.binary(level + 1)?;
                let lpos = lhs.pos();
                lhs = CExpr::new(
                    CExprKind::Binary {
                        op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    lpos,
                );
            } else if (p == "%" && level == 5) || ((p == "<<" || p == ">>") && level == 3) {
                // `<<`/`>>` bind tighter than relational ops; treating them at
                // the relational level is enough for a rejection diagnostic.
                self.bump();
                let rhs = self.binary(level + 1)?;
                lhs = unsupported(p, vec![lhs, rhs], pos);
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<CExpr, Diagnostic> {
        let pos = self.pos();
        if let Tok::Punct(p) = *self.tok() {
            if matches!(p, "-" | "+" | "!" | "~" | "*" | "&" | "++" | "--") {
                self.bump();
                let operand = self.unary()?;
                let name = match p {
                    "-" => "unary -",
                    "+" => "unary +",
                    "*" => "pointer dereference",
                    "&" => "address-of",
                    "++" => "prefix ++",
                    "--" => "prefix --",
                    other => other,
                };
                return Ok(unsupported(name, vec![operand], pos));
            }
            if p == "(" && self.is_cast() {
                self.bump();
                let (mut ty, _) = self.decl_specifiers()?;
                self.pointers(&mut ty);
                self.expect_punct(")")?;
                let operand = self.unary()?;
                return Ok(unsupported("cast", vec![operand], pos));
            }
        }
        if self.is_word("sizeof") {
            self.bump();
            let operand = self.unary()?;
            return Ok(unsupported("sizeof", vec![operand], pos));
        }
        self.postfix()
    }

    fn is_cast(&self) -> bool {
        matches!(self.tok_at(1), Tok::Ident(w) if DECL_WORDS.contains(&w.as_str()))
    }

    fn postfix(&mut self) -> Result<CExpr, Diagnostic> {
        let mut e = self.primary()?;
        loop {
            let pos = self.pos();
            if self.is_punct("(") {
                self.bump();
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.assignment()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                let epos = e.pos();
                e = match e.kind {
                    CExprKind::Var(name) => CExpr::new(CExprKind::Call { name, args }, epos),
                    kind => {
                        let mut ops = vec![CExpr::new(kind, epos)];
                        ops.extend(args);
                        unsupported("indirect call", ops, pos)
                    }
                };
            } else if self.is_punct("[") {
                self.bump();
                let idx = self.expression()?;
                self.expect_punct("]")?;
                e = unsupported("array subscript", vec![e, idx], pos);
            } else if self.is_punct(".") || self.is_punct("->") {
                let op = if self.is_punct(".") { "." } else { "->" };
                self.bump();
                self.expect_ident()?;
                e = unsupported(if op == "." { "member access" } else { "->" }, vec![e], pos);
            } else if self.is_punct("++") || self.is_punct("--") {
                let op = if self.is_punct("++") {
                    "postfix ++"
                } else {
                    "postfix --"
                };
                self.bump();
                e = unsupported(op, vec![e], pos);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<CExpr, Diagnostic> {
        let pos = self.pos();
        match self.tok().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(CExpr::new(CExprKind::IntLit(v), pos))
            }
            Tok::OtherLit(text) => {
                self.bump();
                let what = if text.starts_with('"') {
                    "string literal"
                } else if text.starts_with('\'') {
                    "character literal"
                } else {
                    "floating-point literal"
                };
                Ok(unsupported(what, Vec::new(), pos))
            }
            Tok::Ident(_) => {
                let (name, _) = self.expect_ident()?;
                Ok(CExpr::new(CExprKind::Var(name), pos))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expression()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Annot { .. } => Err(syntax(pos, "annotation inside an expression")),
            _ => Err(syntax(
                pos,
                format!("expected an expression, found `{}`", self.describe()),
            )),
        }
    }
}

fn unsupported(construct: &str, operands: Vec<CExpr>, pos: Pos) -> CExpr {
    CExpr::new(
        CExprKind::Unsupported {
            construct: construct.to_string(),
            operands,
        },
        pos,
    )
}

pub(crate) fn c_binop(p: &str) -> Option<BinOp> {
    Some(match p {
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "/" => BinOp::Div,
        "<" => BinOp::Lt,
        ">" => BinOp::Gt,
        "<=" => BinOp::Le,
        ">=" => BinOp::Ge,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        _ => return None,
    })
}

/// Extracts name and arity from `def T name(T a, T b) = ...`.
fn model_def(text: &str, pos: Pos) -> Result<ModelFnDef, Diagnostic> {
    let toks = lex(text, pos, false)?;
    let bad = || {
        syntax(
            pos,
            "malformed `ABS def`; expected `def Type name(params) = expr`",
        )
    };
    let open = toks
        .iter()
        .position(|t| t.tok == Tok::Punct("("))
        .ok_or_else(bad)?;
    let name = match toks.get(open.wrapping_sub(1)).map(|t| &t.tok) {
        Some(Tok::Ident(n)) if open >= 3 => n.clone(),
        _ => return Err(bad()),
    };
    let close = toks[open..]
        .iter()
        .position(|t| t.tok == Tok::Punct(")"))
        .ok_or_else(bad)?
        + open;
    let inner = &toks[open + 1..close];
    let arity = if inner.is_empty() {
        0
    } else {
        inner.iter().filter(|t| t.tok == Tok::Punct(",")).count() + 1
    };
    Ok(ModelFnDef {
        text: text.to_string(),
        name,
        arity,
        loc: Loc(pos),
    })
}

/// A strong invariant belongs to the single global it mentions; invariants
/// mentioning no global or several attach to the nearest following global
/// (else the nearest preceding one), where validation reports them.
fn attach_invariants(
    program: &mut CProgram,
    invariants: Vec<(SpecExpr, Pos)>,
) -> Result<(), Diagnostic> {
    for (inv, pos) in invariants {
        let vars = inv.variables();
        let named: Vec<usize> = program
            .globals
            .iter()
            .enumerate()
            .filter(|(_, g)| vars.contains(&g.name))
            .map(|(i, _)| i)
            .collect();
        let target = if named.len() == 1 {
            Some(named[0])
        } else {
            program
                .globals
                .iter()
                .position(|g| g.loc.0 > pos)
                .or_else(|| program.globals.iter().rposition(|g| g.loc.0 < pos))
        };
        let Some(idx) = target else {
            return Err(syntax(
                pos,
                "strong global invariant without a global variable",
            ));
        };
        let g = &mut program.globals[idx];
        g.strong_invariant = Some(match g.strong_invariant.take() {
            None => inv,
            Some(prev) => SpecExpr::binary(SpecBinOp::And, prev, inv),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_between_header_and_body() {
        let src = "int f(int v)\n/*@ requires v == 1; ensures \\result == 1; @*/ { return v; }";
        let p = parse(src).unwrap().program;
        let c = p.functions[0].contract.as_ref().unwrap();
        assert_eq!(c.requires.len(), 1);
        assert_eq!(c.ensures.len(), 1);
    }

    #[test]
    fn invariant_after_declaration_attaches_by_name() {
        let src = "int y; int x; //@ strong global invariant x == 0 || x == 1;\nint main(void){return 0;}";
        let p = parse(src).unwrap().program;
        assert!(p.global("x").unwrap().strong_invariant.is_some());
        assert!(p.global("y").unwrap().strong_invariant.is_none());
    }

    #[test]
    fn rejected_statement_reports_position() {
        let err = parse("int main(void){\n  for(;;){}\n}").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::SubsetViolation);
        assert_eq!(err.pos, Pos::new(2, 3));
    }

    #[test]
    fn unary_minus_is_kept_for_validation() {
        let p = parse("int main(void){ return -1; }").unwrap().program;
        let CStmtKind::Return(Some(e)) = &p.functions[0].body[0].kind else {
            panic!()
        };
        assert!(matches!(e.kind, CExprKind::Unsupported { .. }));
    }

    #[test]
    fn model_def_name_and_arity() {
        let d = model_def("def Int add ( Int a , Int b ) = a + b", Pos::new(1, 1)).unwrap();
        assert_eq!((d.name.as_str(), d.arity), ("add", 2));
    }

    #[test]
    fn missing_semicolon_is_a_syntax_error() {
        let err = parse("int main(void){ return 0 }").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Syntax);
        assert_eq!(err.pos, Pos::new(1, 26));
    }
}
