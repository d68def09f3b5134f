//! ACSL annotation clauses and the specification-expression language.

use std::collections::BTreeSet;

use super::ast::{BinOp, SpecBinOp, SpecExpr};
use super::lexer::{lex, Tok, Token};
use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    Requires(SpecExpr),
    Ensures(SpecExpr),
    StrongInvariant(SpecExpr),
    LoopInvariant(SpecExpr),
    /// `ABS def ...` with the text starting at `def`.
    ModelDef(String),
    /// Parsed but without effect (`assigns`, `loop assigns`, ...).
    Ignored(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedClause {
    pub clause: Clause,
    pub pos: Pos,
}

/// Splits an annotation body into clauses separated by `;`.
pub fn parse_annotation(text: &str, start: Pos) -> Result<Vec<LocatedClause>, Diagnostic> {
    let toks = lex(text, start, false)?;
    let mut out = Vec::new();
    let mut i = 0;
    while !matches!(toks[i].tok, Tok::Eof) {
        let mut j = i;
        let mut depth = 0i32;
        while !matches!(toks[j].tok, Tok::Eof) {
            match toks[j].tok {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => depth -= 1,
                Tok::Punct(";") if depth == 0 => break,
                _ => {}
            }
            j += 1;
        }
        if matches!(toks[j].tok, Tok::Eof) {
            return Err(Diagnostic::error(
                DiagnosticKind::Syntax,
                toks[j].pos,
                "annotation clause must end with `;`",
            ));
        }
        out.push(parse_clause(&toks[i..j], toks[i].pos)?);
        i = j + 1;
    }
    Ok(out)
}

fn parse_clause(toks: &[Token], pos: Pos) -> Result<LocatedClause, Diagnostic> {
    let words: Vec<&str> = toks
        .iter()
        .take(3)
        .map(|t| match &t.tok {
            Tok::Ident(s) => s.as_str(),
            _ => "",
        })
        .collect();
    let expr_after = |n: usize| -> Result<SpecExpr, Diagnostic> {
        if toks.len() <= n {
            return Err(Diagnostic::error(
                DiagnosticKind::Syntax,
                pos,
                "missing expression in annotation clause",
            ));
        }
        parse_spec_tokens(&toks[n..])
    };
    let clause = match words.as_slice() {
        ["requires", ..] => Clause::Requires(expr_after(1)?),
        ["ensures", ..] => Clause::Ensures(expr_after(1)?),
        ["assigns", ..] => Clause::Ignored("assigns".into()),
        ["strong", "global", "invariant"] => Clause::StrongInvariant(expr_after(3)?),
        ["loop", "invariant", ..] => Clause::LoopInvariant(expr_after(2)?),
        ["loop", "assigns", ..] | ["loop", "variant", ..] => {
            Clause::Ignored(format!("loop {}", words[1]))
        }
        ["ABS", "def", ..] => Clause::ModelDef(tokens_to_text(&toks[1..])),
        _ => {
            let shown = toks
                .iter()
                .take(3)
                .map(token_text)
                .collect::<Vec<_>>()
                .join(" ");
            return Err(Diagnostic::error(
                DiagnosticKind::SubsetViolation,
                pos,
                format!("unsupported annotation clause `{shown}`; supported: requires, ensures, strong global invariant, loop invariant, ABS def"),
            ));
        }
    };
    Ok(LocatedClause { clause, pos })
}

pub(crate) fn token_text(t: &Token) -> String {
    match &t.tok {
        Tok::Ident(s) => s.clone(),
        Tok::Int(v) => v.to_string(),
        Tok::OtherLit(s) => s.clone(),
        Tok::Punct(p) => (*p).to_string(),
        Tok::Annot { .. } => "/*@ ... @*/".into(),
        Tok::Hash => "#".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn tokens_to_text(toks: &[Token]) -> String {
    toks.iter().map(token_text).collect::<Vec<_>>().join(" ")
}

/// Parses a specification expression from text.
///
/// Precedence follows C; `\result` is a distinguished symbol and the top
/// level must be boolean. Identifiers are resolved against `scope` when one
/// is given.
pub fn parse_spec_expr(text: &str, scope: Option<&SpecScope>) -> Result<SpecExpr, Diagnostic> {
    let toks = lex(text, Pos::new(1, 1), false)?;
    let n = toks.len() - 1;
    if n == 0 {
        return Err(Diagnostic::error(
            DiagnosticKind::Syntax,
            Pos::new(1, 1),
            "empty specification expression",
        ));
    }
    let e = parse_spec_tokens(&toks[..n])?;
    if let Some(scope) = scope {
        scope.check(&e, Pos::new(1, 1))?;
    }
    check_boolean(&e, Pos::new(1, 1))?;
    Ok(e)
}

pub(crate) fn parse_spec_tokens(toks: &[Token]) -> Result<SpecExpr, Diagnostic> {
    let mut p = SpecParser { toks, i: 0 };
    let e = p.implies()?;
    if p.i < toks.len() {
        return Err(Diagnostic::error(
            DiagnosticKind::Syntax,
            toks[p.i].pos,
            format!("unexpected `{}` in specification", token_text(&toks[p.i])),
        ));
    }
    Ok(e)
}

struct SpecParser<'a> {
    toks: &'a [Token],
    i: usize,
}

impl<'a> SpecParser<'a> {
    fn peek_punct(&self) -> Option<&'static str> {
        match self.toks.get(self.i).map(|t| &t.tok) {
            Some(Tok::Punct(p)) => Some(p),
            _ => None,
        }
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.i)
            .or(self.toks.last())
            .map(|t| t.pos)
            .unwrap_or_default()
    }

    fn expect(&mut self, p: &str) -> Result<(), Diagnostic> {
        if self.peek_punct() == Some(p) {
            self.i += 1;
            Ok(())
        } else {
            Err(Diagnostic::error(
                DiagnosticKind::Syntax,
                self.pos(),
                format!("expected `{p}` in specification"),
            ))
        }
    }

    fn implies(&mut self) -> Result<SpecExpr, Diagnostic> {
        let lhs = self.or()?;
        if self.peek_punct() == Some("==>") {
            self.i += 1;
            let rhs = self.implies()?;
            return Ok(SpecExpr::binary(SpecBinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<SpecExpr, Diagnostic> {
        let mut lhs = self.and()?;
        while self.peek_punct() == Some("||") {
            self.i += 1;
            let rhs = self.and()?;
            lhs = SpecExpr::binary(SpecBinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<SpecExpr, Diagnostic> {
        let mut lhs = self.binary(2)?;
        while self.peek_punct() == Some("&&") {
            self.i += 1;
            let rhs = self.binary(2)?;
            lhs = SpecExpr::binary(SpecBinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary(&mut self, level: u8) -> Result<SpecExpr, Diagnostic> {
        if level > 5 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek_punct().and_then(arith_op) {
                Some(op) if op.precedence() == level => op,
                _ => break,
            };
            self.i += 1;
            let rhs = self.binary(level + 1)?;
            lhs = SpecExpr::binary(SpecBinOp::Arith(op), lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<SpecExpr, Diagnostic> {
        match self.peek_punct() {
            Some("!") => {
                self.i += 1;
                Ok(SpecExpr::Not(Box::new(self.unary()?)))
            }
            Some("-") => {
                self.i += 1;
                match self.unary()? {
                    SpecExpr::Int(v) => Ok(SpecExpr::Int(-v)),
                    e => Ok(SpecExpr::binary(
                        SpecBinOp::Arith(BinOp::Sub),
                        SpecExpr::Int(0),
                        e,
                    )),
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<SpecExpr, Diagnostic> {
        let Some(t) = self.toks.get(self.i) else {
            return Err(Diagnostic::error(
                DiagnosticKind::Syntax,
                self.pos(),
                "unexpected end of specification",
            ));
        };
        let pos = t.pos;
        match &t.tok {
            Tok::Int(v) => {
                self.i += 1;
                Ok(SpecExpr::Int(*v))
            }
            Tok::Punct("(") => {
                self.i += 1;
                let e = self.implies()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.i += 1;
                match name.as_str() {
                    "\\result" => return Ok(SpecExpr::Result),
                    "\\true" => return Ok(SpecExpr::Bool(true)),
                    "\\false" => return Ok(SpecExpr::Bool(false)),
                    n if n.starts_with('\\') => {
                        return Err(Diagnostic::error(
                            DiagnosticKind::SubsetViolation,
                            pos,
                            format!("unsupported ACSL built-in `{n}`"),
                        ))
                    }
                    _ => {}
                }
                if self.peek_punct() == Some("(") {
                    self.i += 1;
                    let mut args = Vec::new();
                    if self.peek_punct() != Some(")") {
                        loop {
                            args.push(self.implies()?);
                            if self.peek_punct() == Some(",") {
                                self.i += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    return Ok(SpecExpr::Call {
                        name: name.clone(),
                        args,
                    });
                }
                Ok(SpecExpr::Var(name.clone()))
            }
            _ => Err(Diagnostic::error(
                DiagnosticKind::Syntax,
                pos,
                format!("unexpected `{}` in specification", token_text(t)),
            )),
        }
    }
}

fn arith_op(p: &str) -> Option<BinOp> {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecTy {
    Int,
    Bool,
}

/// Infers the type of a specification expression.
pub fn spec_type(e: &SpecExpr, pos: Pos) -> Result<SpecTy, Diagnostic> {
    let mismatch = |what: &str| {
        Err(Diagnostic::error(
            DiagnosticKind::Type,
            pos,
            format!("type error in specification: {what}"),
        ))
    };
    match e {
        SpecExpr::Int(_) | SpecExpr::Var(_) | SpecExpr::Result => Ok(SpecTy::Int),
        SpecExpr::Bool(_) => Ok(SpecTy::Bool),
        SpecExpr::Not(inner) => match spec_type(inner, pos)? {
            SpecTy::Bool => Ok(SpecTy::Bool),
            SpecTy::Int => mismatch("`!` applied to an integer"),
        },
        SpecExpr::Call { args, .. } => {
            for a in args {
                if spec_type(a, pos)? != SpecTy::Int {
                    return mismatch("model function argument must be an integer");
                }
            }
            Ok(SpecTy::Int)
        }
        SpecExpr::Binary { op, lhs, rhs } => {
            let (l, r) = (spec_type(lhs, pos)?, spec_type(rhs, pos)?);
            match op {
                SpecBinOp::And | SpecBinOp::Or | SpecBinOp::Implies => {
                    if l == SpecTy::Bool && r == SpecTy::Bool {
                        Ok(SpecTy::Bool)
                    } else {
                        mismatch("logical connective over integers")
                    }
                }
                SpecBinOp::Arith(op) if op.is_comparison() => {
                    if l == r && (l == SpecTy::Int || matches!(op, BinOp::Eq | BinOp::Ne)) {
                        Ok(SpecTy::Bool)
                    } else {
                        mismatch("comparison between incompatible operands")
                    }
                }
                SpecBinOp::Arith(_) => {
                    if l == SpecTy::Int && r == SpecTy::Int {
                        Ok(SpecTy::Int)
                    } else {
                        mismatch("arithmetic over booleans")
                    }
                }
            }
        }
    }
}

pub fn check_boolean(e: &SpecExpr, pos: Pos) -> Result<(), Diagnostic> {
    match spec_type(e, pos)? {
        SpecTy::Bool => Ok(()),
        SpecTy::Int => Err(Diagnostic::error(
            DiagnosticKind::Type,
            pos,
            "specification must be boolean-typed",
        )),
    }
}

/// Names a specification expression may refer to.
#[derive(Debug, Clone, Default)]
pub struct SpecScope {
    pub variables: BTreeSet<String>,
    /// Model functions with their arity.
    pub functions: Vec<(String, usize)>,
    pub allow_result: bool,
}

impl SpecScope {
    pub fn check(&self, e: &SpecExpr, pos: Pos) -> Result<(), Diagnostic> {
        match e {
            SpecExpr::Var(v) if !self.variables.contains(v) => Err(Diagnostic::error(
                DiagnosticKind::UnknownIdentifier,
                pos,
                format!("unknown identifier `{v}` in specification"),
            )),
            SpecExpr::Result if !self.allow_result => Err(Diagnostic::error(
                DiagnosticKind::UnknownIdentifier,
                pos,
                "`\\result` is not available here",
            )),
            SpecExpr::Not(inner) => self.check(inner, pos),
            SpecExpr::Binary { lhs, rhs, .. } => {
                self.check(lhs, pos)?;
                self.check(rhs, pos)
            }
            SpecExpr::Call { name, args } => {
                match self.functions.iter().find(|(n, _)| n == name) {
                    None => {
                        return Err(Diagnostic::error(
                            DiagnosticKind::UnknownIdentifier,
                            pos,
                            format!("unknown model function `{name}`"),
                        ))
                    }
                    Some((_, arity)) if *arity != args.len() => {
                        return Err(Diagnostic::error(
                            DiagnosticKind::Type,
                            pos,
                            format!("model function `{name}` expects {arity} argument(s)"),
                        ))
                    }
                    _ => {}
                }
                args.iter().try_for_each(|a| self.check(a, pos))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjunction_of_equalities() {
        let e = parse_spec_expr("\\result == val - 1 || \\result == val", None).unwrap();
        let SpecExpr::Binary {
            op: SpecBinOp::Or,
            lhs,
            rhs,
        } = e
        else {
            panic!("expected disjunction")
        };
        assert_eq!(
            *lhs,
            SpecExpr::binary(
                SpecBinOp::Arith(BinOp::Eq),
                SpecExpr::Result,
                SpecExpr::binary(
                    SpecBinOp::Arith(BinOp::Sub),
                    SpecExpr::Var("val".into()),
                    SpecExpr::Int(1)
                )
            )
        );
        assert_eq!(
            *rhs,
            SpecExpr::binary(
                SpecBinOp::Arith(BinOp::Eq),
                SpecExpr::Result,
                SpecExpr::Var("val".into())
            )
        );
    }

    #[test]
    fn integer_at_top_level_is_rejected() {
        let err = parse_spec_expr("1", None).unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Type);
    }

    #[test]
    fn model_function_application() {
        let scope = SpecScope {
            variables: ["n".to_string()].into_iter().collect(),
            functions: vec![("fib".into(), 1)],
            allow_result: true,
        };
        let e = parse_spec_expr("\\result <= fib(n)", Some(&scope)).unwrap();
        assert_eq!(
            e,
            SpecExpr::binary(
                SpecBinOp::Arith(BinOp::Le),
                SpecExpr::Result,
                SpecExpr::Call {
                    name: "fib".into(),
                    args: vec![SpecExpr::Var("n".into())]
                }
            )
        );
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let scope = SpecScope {
            variables: ["n".to_string()].into_iter().collect(),
            ..Default::default()
        };
        let err = parse_spec_expr("m > 0", Some(&scope)).unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::UnknownIdentifier);
    }

    #[test]
    fn clauses_split_on_semicolons() {
        let cl = parse_annotation(
            " requires val == 1; ensures \\result == 1; ",
            Pos::new(3, 1),
        )
        .unwrap();
        assert_eq!(cl.len(), 2);
        assert!(matches!(cl[0].clause, Clause::Requires(_)));
        assert!(matches!(cl[1].clause, Clause::Ensures(_)));
        assert_eq!(cl[0].pos.line, 3);
    }

    #[test]
    fn model_def_text_is_kept() {
        let cl = parse_annotation(
            " ABS def Int fib(Int n) = if n <= 2 then 1\n else fib(n-1) + fib(n-2);",
            Pos::new(1, 1),
        )
        .unwrap();
        let Clause::ModelDef(text) = &cl[0].clause else {
            panic!()
        };
        assert!(text.starts_with("def Int fib"));
    }

    #[test]
    fn assigns_is_ignored() {
        let cl = parse_annotation(" assigns x;", Pos::new(1, 1)).unwrap();
        assert_eq!(cl[0].clause, Clause::Ignored("assigns".into()));
    }
}
