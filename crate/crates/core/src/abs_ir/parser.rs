//! Parser for the textual model format.

use super::ast::*;
use crate::c_frontend::lexer::{lex, Tok, Token};
use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

pub fn parse_model(src: &str) -> Result<AbsModel, Diagnostic> {
    let toks = lex(src, Pos::new(1, 1), false)?;
    let mut p = P { toks, i: 0 };
    p.model()
}

/// Parses a standalone pure expression.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let toks = lex(src, Pos::new(1, 1), false)?;
    let mut p = P { toks, i: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses `def T name(params) = body` (with or without trailing `;`).
pub fn parse_fundef(src: &str) -> Result<FunDef, Diagnostic> {
    let toks = lex(src, Pos::new(1, 1), false)?;
    let mut p = P { toks, i: 0 };
    let f = p.fundef()?;
    p.eat(";");
    p.expect_eof()?;
    Ok(f)
}

struct P {
    toks: Vec<Token>,
    i: usize,
}

fn err(pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagnosticKind::Syntax, pos, msg)
}

impl P {
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

    fn is(&self, p: &str) -> bool {
        matches!(self.tok(), Tok::Punct(q) if *q == p)
    }

    fn is_at(&self, k: usize, p: &str) -> bool {
        matches!(self.tok_at(k), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, w: &str) -> bool {
        matches!(self.tok(), Tok::Ident(s) if s == w)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, w: &str) -> bool {
        if self.is_kw(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn found(&self) -> String {
        match self.tok() {
            Tok::Ident(s) => s.clone(),
            Tok::Int(v) => v.to_string(),
            Tok::OtherLit(s) => s.clone(),
            Tok::Punct(p) => p.to_string(),
            Tok::Eof => "end of input".into(),
            _ => "?".into(),
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), Diagnostic> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(err(
                self.pos(),
                format!("expected `{p}`, found `{}`", self.found()),
            ))
        }
    }

    fn expect_kw(&mut self, w: &str) -> Result<(), Diagnostic> {
        if self.eat_kw(w) {
            Ok(())
        } else {
            Err(err(
                self.pos(),
                format!("expected `{w}`, found `{}`", self.found()),
            ))
        }
    }

    fn expect_eof(&self) -> Result<(), Diagnostic> {
        if matches!(self.tok(), Tok::Eof) {
            Ok(())
        } else {
            Err(err(self.pos(), format!("unexpected `{}`", self.found())))
        }
    }

    fn ident(&mut self) -> Result<String, Diagnostic> {
        match self.tok().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(err(
                self.pos(),
                format!("expected identifier, found `{}`", self.found()),
            )),
        }
    }

    fn model(&mut self) -> Result<AbsModel, Diagnostic> {
        self.expect_kw("module")?;
        let mut module = self.ident()?;
        while self.eat(".") {
            module.push('.');
            module.push_str(&self.ident()?);
        }
        self.expect(";")?;
        let mut m = AbsModel::empty(&module);
        loop {
            let specs = self.specs()?;
            if matches!(self.tok(), Tok::Eof) {
                if !specs.is_empty() {
                    return Err(err(self.pos(), "annotation at end of input"));
                }
                break;
            }
            if self.is("{") {
                if !specs.is_empty() {
                    return Err(err(self.pos(), "annotation before main block"));
                }
                self.bump();
                m.main_block = self.stmts_until_close()?;
                self.expect_eof()?;
                break;
            }
            if self.eat_kw("data") {
                m.data_decls.push(self.data_decl()?);
            } else if self.is_kw("def") {
                m.functions.push(self.fundef()?);
                self.expect(";")?;
            } else if self.eat_kw("interface") {
                m.interfaces.push(self.interface()?);
            } else if self.eat_kw("class") {
                m.classes.push(self.class(specs)?);
                continue;
            } else {
                return Err(err(
                    self.pos(),
                    format!("expected declaration, found `{}`", self.found()),
                ));
            }
            if !specs.is_empty() {
                return Err(err(self.pos(), "annotations may only precede classes here"));
            }
        }
        Ok(m)
    }

    fn data_decl(&mut self) -> Result<DataDecl, Diagnostic> {
        let name = self.ident()?;
        self.expect("=")?;
        let mut ctors = Vec::new();
        loop {
            let c = self.ident()?;
            let mut args = Vec::new();
            if self.eat("(") {
                if !self.is(")") {
                    loop {
                        args.push(self.ty()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
            }
            ctors.push((c, args));
            if !self.eat("|") {
                break;
            }
        }
        self.expect(";")?;
        Ok(DataDecl { name, ctors })
    }

    fn fundef(&mut self) -> Result<FunDef, Diagnostic> {
        self.expect_kw("def")?;
        let ret = self.ty()?;
        let name = self.ident()?;
        let params = self.params()?;
        self.expect("=")?;
        let body = self.expr()?;
        Ok(FunDef {
            ret,
            name,
            params,
            body,
        })
    }

    fn ty(&mut self) -> Result<Type, Diagnostic> {
        let pos = self.pos();
        let name = self.ident()?;
        Ok(match name.as_str() {
            "Int" => Type::Int,
            "Bool" => Type::Bool,
            "Unit" => Type::Unit,
            "Fut" => {
                self.expect("<")?;
                let inner = self.ty()?;
                self.close_angle()?;
                Type::fut(inner)
            }
            n if n.starts_with(|c: char| c.is_ascii_uppercase()) => Type::Named(name),
            _ => return Err(err(pos, format!("expected a type, found `{name}`"))),
        })
    }

    fn close_angle(&mut self) -> Result<(), Diagnostic> {
        if self.is(">>") {
            // Split `>>` closing two nested type arguments.
            self.toks[self.i].tok = Tok::Punct(">");
            return Ok(());
        }
        self.expect(">")
    }

    fn params(&mut self) -> Result<Vec<Param>, Diagnostic> {
        self.expect("(")?;
        let mut out = Vec::new();
        if !self.is(")") {
            loop {
                let ty = self.ty()?;
                let name = self.ident()?;
                out.push(Param { ty, name });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(out)
    }

    fn specs(&mut self) -> Result<Vec<Spec>, Diagnostic> {
        let mut out = Vec::new();
        while self.is("[") {
            self.bump();
            self.expect_kw("Spec")?;
            self.expect(":")?;
            let pos = self.pos();
            let kind = match self.ident()?.as_str() {
                "ObjInv" => SpecKind::ObjInv,
                "Ensures" => SpecKind::Ensures,
                "Requires" => SpecKind::Requires,
                "WhileInv" => SpecKind::WhileInv,
                other => return Err(err(pos, format!("unknown annotation `{other}`"))),
            };
            self.expect("(")?;
            let expr = self.expr()?;
            self.expect(")")?;
            self.expect("]")?;
            out.push(Spec { kind, expr });
        }
        Ok(out)
    }

    fn interface(&mut self) -> Result<Interface, Diagnostic> {
        let name = self.ident()?;
        let mut extends = Vec::new();
        if self.eat_kw("extends") {
            loop {
                extends.push(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("{")?;
        let mut methods = Vec::new();
        loop {
            let specs = self.specs()?;
            if self.eat("}") {
                if !specs.is_empty() {
                    return Err(err(self.pos(), "annotation without method"));
                }
                break;
            }
            let ret = self.ty()?;
            let mname = self.ident()?;
            let params = self.params()?;
            self.expect(";")?;
            methods.push(MethodSig {
                specs,
                ret,
                name: mname,
                params,
            });
        }
        Ok(Interface {
            name,
            extends,
            methods,
        })
    }

    fn class(&mut self, specs: Vec<Spec>) -> Result<Class, Diagnostic> {
        let name = self.ident()?;
        let params = if self.is("(") {
            self.params()?
        } else {
            Vec::new()
        };
        let mut implements = Vec::new();
        if self.eat_kw("implements") {
            loop {
                implements.push(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("{")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        loop {
            let mspecs = self.specs()?;
            if self.eat("}") {
                if !mspecs.is_empty() {
                    return Err(err(self.pos(), "annotation without method"));
                }
                break;
            }
            let ty = self.ty()?;
            let fname = self.ident()?;
            if self.is("(") {
                let params = self.params()?;
                self.expect("{")?;
                let body = self.stmts_until_close()?;
                methods.push(Method {
                    sig: MethodSig {
                        specs: mspecs,
                        ret: ty,
                        name: fname,
                        params,
                    },
                    body,
                });
            } else {
                if !mspecs.is_empty() {
                    return Err(err(self.pos(), "annotation on a field"));
                }
                let init = if self.eat("=") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(";")?;
                fields.push(FieldDecl {
                    ty,
                    name: fname,
                    init,
                });
            }
        }
        Ok(Class {
            specs,
            name,
            params,
            implements,
            fields,
            methods,
        })
    }

    /// Statements up to and including `}`.
    fn stmts_until_close(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        let mut out = Vec::new();
        while !self.eat("}") {
            if matches!(self.tok(), Tok::Eof) {
                return Err(err(self.pos(), "unexpected end of input, expected `}`"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn block_or_stmt(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        if self.eat("{") {
            self.stmts_until_close()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn starts_decl(&self) -> bool {
        match self.tok() {
            Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()) => {
                matches!(self.tok_at(1), Tok::Ident(_)) || (s == "Fut" && self.is_at(1, "<"))
            }
            _ => false,
        }
    }

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let specs = self.specs()?;
        if !specs.is_empty() {
            if !self.is_kw("while") {
                return Err(err(
                    self.pos(),
                    "only loops may be annotated inside methods",
                ));
            }
            if specs.iter().any(|s| s.kind != SpecKind::WhileInv) {
                return Err(err(self.pos(), "loops accept only WhileInv annotations"));
            }
        }
        if self.eat("{") {
            return Ok(Stmt::Block(self.stmts_until_close()?));
        }
        if self.eat_kw("while") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.block_or_stmt()?;
            return Ok(Stmt::While {
                cond,
                invariants: specs.into_iter().map(|s| s.expr).collect(),
                body,
            });
        }
        if self.eat_kw("if") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_branch = self.block_or_stmt()?;
            let else_branch = if self.eat_kw("else") {
                Some(self.block_or_stmt()?)
            } else {
                None
            };
            return Ok(Stmt::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        if self.eat_kw("await") {
            let mut polls = Vec::new();
            loop {
                let e = self.unary()?;
                self.expect("?")?;
                polls.push(e);
                if !self.eat("&") {
                    break;
                }
            }
            self.expect(";")?;
            return Ok(Stmt::Await(polls));
        }
        if self.eat_kw("return") {
            let r = self.rhs()?;
            self.expect(";")?;
            return Ok(Stmt::Return(r));
        }
        if self.eat_kw("skip") {
            self.expect(";")?;
            return Ok(Stmt::Skip);
        }
        if self.starts_decl() {
            let ty = self.ty()?;
            let name = self.ident()?;
            let init = if self.eat("=") {
                Some(self.rhs()?)
            } else {
                None
            };
            self.expect(";")?;
            return Ok(Stmt::VarDecl { ty, name, init });
        }
        // Assignment: `x = ...` or `this.f = ...`.
        let target = match (self.tok().clone(), self.tok_at(1).clone()) {
            (Tok::Ident(v), Tok::Punct("=")) if v != "this" => {
                self.i += 2;
                Some(Target::Var(v))
            }
            (Tok::Ident(t), Tok::Punct(".")) if t == "this" && self.is_at(3, "=") => {
                let Tok::Ident(f) = self.tok_at(2).clone() else {
                    return Err(err(self.pos(), "expected field name after `this.`"));
                };
                self.i += 4;
                Some(Target::Field(f))
            }
            _ => None,
        };
        let value = self.rhs()?;
        self.expect(";")?;
        Ok(match target {
            Some(target) => Stmt::Assign { target, value },
            None => Stmt::Rhs(value),
        })
    }

    fn args(&mut self) -> Result<Vec<Expr>, Diagnostic> {
        self.expect("(")?;
        let mut out = Vec::new();
        if !self.is(")") {
            loop {
                out.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(out)
    }

    fn rhs(&mut self) -> Result<Rhs, Diagnostic> {
        if self.eat_kw("new") {
            self.eat_kw("local");
            let class = self.ident()?;
            let args = self.args()?;
            return Ok(Rhs::New { class, args });
        }
        let save = self.i;
        if let Some(callee) = self.simple_target() {
            if self.is("!") && matches!(self.tok_at(1), Tok::Ident(_)) && self.is_at(2, "(") {
                self.bump();
                let method = self.ident()?;
                let args = self.args()?;
                return Ok(Rhs::AsyncCall {
                    callee,
                    method,
                    args,
                });
            }
            if self.is(".") {
                if let Tok::Ident(m) = self.tok_at(1).clone() {
                    if m == "get" && !self.is_at(2, "(") {
                        self.i += 2;
                        return Ok(Rhs::Get(callee));
                    }
                    if self.is_at(2, "(") {
                        self.i += 2;
                        let args = self.args()?;
                        return Ok(Rhs::SyncCall {
                            callee,
                            method: m,
                            args,
                        });
                    }
                }
            }
        }
        self.i = save;
        Ok(Rhs::Expr(self.expr()?))
    }

    /// `this`, `this.f` or a variable, when followed by a call or `.get`.
    fn simple_target(&mut self) -> Option<Expr> {
        let Tok::Ident(name) = self.tok().clone() else {
            return None;
        };
        if name == "this" {
            self.bump();
            let field_access = self.is(".")
                && matches!(self.tok_at(1), Tok::Ident(f) if f != "get")
                && !self.is_at(2, "(");
            if field_access {
                let Tok::Ident(f) = self.tok_at(1).clone() else {
                    unreachable!()
                };
                self.i += 2;
                return Some(Expr::Field(f));
            }
            return Some(Expr::This);
        }
        if name.starts_with(|c: char| c.is_ascii_lowercase() || c == '_') && !is_keyword(&name) {
            self.bump();
            return Some(Expr::Var(name));
        }
        None
    }

    pub fn expr(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::cond(c, a, b));
        }
        self.binary(1)
    }

    fn binary(&mut self, level: u8) -> Result<Expr, Diagnostic> {
        if level > 6 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Tok::Punct(p) = self.tok() {
            let op = match BinOp::from_symbol(p) {
                Some(op) if op.precedence() == level => op,
                _ => break,
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat("!") {
            return Ok(Expr::not(self.unary()?));
        }
        if self.is("-") {
            self.bump();
            if let Tok::Int(v) = *self.tok() {
                self.bump();
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        match self.tok().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "True" => return Ok(Expr::Bool(true)),
                    "False" => return Ok(Expr::Bool(false)),
                    "unit" => return Ok(Expr::Unit),
                    "null" => return Ok(Expr::Null),
                    "if" => {
                        self.i -= 1;
                        return self.expr();
                    }
                    "this" => {
                        if self.eat(".") {
                            return Ok(Expr::Field(self.ident()?));
                        }
                        return Ok(Expr::This);
                    }
                    _ => {}
                }
                if is_keyword(&name) {
                    return Err(err(pos, format!("unexpected keyword `{name}`")));
                }
                if self.is("(") {
                    let args = self.args()?;
                    return Ok(Expr::Apply(name, args));
                }
                Ok(Expr::Var(name))
            }
            _ => Err(err(
                pos,
                format!("expected an expression, found `{}`", self.found()),
            )),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "module"
            | "data"
            | "def"
            | "interface"
            | "class"
            | "implements"
            | "extends"
            | "new"
            | "await"
            | "return"
            | "while"
            | "if"
            | "then"
            | "else"
            | "skip"
            | "get"
    )
}
