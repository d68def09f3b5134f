//! Textual form of models, following the layout of extracted models.

use std::fmt::Write;

use super::ast::*;

pub fn print_model(m: &AbsModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {};", m.module);
    for d in &m.data_decls {
        let ctors = d
            .ctors
            .iter()
            .map(|(c, args)| {
                if args.is_empty() {
                    c.clone()
                } else {
                    let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                    format!("{c}({})", a.join(", "))
                }
            })
            .collect::<Vec<_>>()
            .join(" | ");
        let _ = writeln!(out, "\ndata {} = {};", d.name, ctors);
    }
    for f in &m.functions {
        let _ = writeln!(
            out,
            "\ndef {} {}({}) =\n  {};",
            f.ret,
            f.name,
            params(&f.params),
            print_expr(&f.body)
        );
    }
    for i in &m.interfaces {
        out.push('\n');
        if i.extends.is_empty() {
            let _ = writeln!(out, "interface {} {{", i.name);
        } else {
            let _ = writeln!(
                out,
                "interface {} extends {} {{",
                i.name,
                i.extends.join(", ")
            );
        }
        for s in &i.methods {
            specs(&s.specs, 1, &mut out);
            indent(1, &mut out);
            let _ = writeln!(out, "{} {}({});", s.ret, s.name, params(&s.params));
        }
        out.push_str("}\n");
    }
    for c in &m.classes {
        out.push('\n');
        print_class(c, &mut out);
    }
    out.push('\n');
    if m.main_block.is_empty() {
        out.push_str("{ }\n");
    } else {
        out.push_str("{\n");
        for s in &m.main_block {
            print_stmt(s, 1, &mut out);
        }
        out.push_str("}\n");
    }
    out
}

fn print_class(c: &Class, out: &mut String) {
    specs(&c.specs, 0, out);
    let _ = write!(out, "class {}", c.name);
    if !c.params.is_empty() {
        let _ = write!(out, "({})", params(&c.params));
    }
    if !c.implements.is_empty() {
        let _ = write!(out, " implements {}", c.implements.join(", "));
    }
    out.push_str(" {\n");
    for f in &c.fields {
        indent(1, out);
        match &f.init {
            Some(e) => {
                let _ = writeln!(out, "{} {} = {};", f.ty, f.name, print_expr(e));
            }
            None => {
                let _ = writeln!(out, "{} {};", f.ty, f.name);
            }
        }
    }
    for m in &c.methods {
        specs(&m.sig.specs, 1, out);
        indent(1, out);
        let _ = writeln!(
            out,
            "{} {}({}){{",
            m.sig.ret,
            m.sig.name,
            params(&m.sig.params)
        );
        for s in &m.body {
            print_stmt(s, 2, out);
        }
        indent(1, out);
        out.push_str("}\n");
    }
    out.push_str("}\n");
}

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| format!("{} {}", p.ty, p.name))
        .collect::<Vec<_>>()
        .join(", ")
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn specs(specs: &[Spec], level: usize, out: &mut String) {
    for s in specs {
        indent(level, out);
        let _ = writeln!(out, "{}", print_spec(s));
    }
}

pub fn print_spec(s: &Spec) -> String {
    format!("[Spec : {}({})]", s.kind.name(), print_expr(&s.expr))
}

pub fn print_stmt(s: &Stmt, level: usize, out: &mut String) {
    indent(level, out);
    match s {
        Stmt::VarDecl { ty, name, init } => match init {
            Some(r) => {
                let _ = writeln!(out, "{ty} {name} = {};", print_rhs(r));
            }
            None => {
                let _ = writeln!(out, "{ty} {name};");
            }
        },
        Stmt::Assign { target, value } => {
            let t = match target {
                Target::Var(v) => v.clone(),
                Target::Field(f) => format!("this.{f}"),
            };
            let _ = writeln!(out, "{t} = {};", print_rhs(value));
        }
        Stmt::Rhs(r) => {
            let _ = writeln!(out, "{};", print_rhs(r));
        }
        Stmt::Await(g) => {
            let polls: Vec<String> = g.iter().map(|e| format!("{}?", print_expr(e))).collect();
            let _ = writeln!(out, "await {};", polls.join(" & "));
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ( {} ){{", print_expr(cond));
            for s in then_branch {
                print_stmt(s, level + 1, out);
            }
            indent(level, out);
            match else_branch {
                Some(els) => {
                    out.push_str("} else {\n");
                    for s in els {
                        print_stmt(s, level + 1, out);
                    }
                    indent(level, out);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        Stmt::While {
            cond,
            invariants,
            body,
        } => {
            for (k, inv) in invariants.iter().enumerate() {
                if k > 0 {
                    indent(level, out);
                }
                let _ = writeln!(out, "[Spec : WhileInv({})]", print_expr(inv));
            }
            if !invariants.is_empty() {
                indent(level, out);
            }
            let _ = writeln!(out, "while ( {} ){{", print_expr(cond));
            for s in body {
                print_stmt(s, level + 1, out);
            }
            indent(level, out);
            out.push_str("}\n");
        }
        Stmt::Return(r) => {
            let _ = writeln!(out, "return {};", print_rhs(r));
        }
        Stmt::Skip => out.push_str("skip;\n"),
        Stmt::Block(items) => {
            out.push_str("{\n");
            for s in items {
                print_stmt(s, level + 1, out);
            }
            indent(level, out);
            out.push_str("}\n");
        }
    }
}

pub fn print_rhs(r: &Rhs) -> String {
    let args = |a: &[Expr]| a.iter().map(print_expr).collect::<Vec<_>>().join(", ");
    match r {
        Rhs::Expr(e) => print_expr(e),
        Rhs::AsyncCall {
            callee,
            method,
            args: a,
        } => format!("{}!{}({})", print_expr(callee), method, args(a)),
        Rhs::SyncCall {
            callee,
            method,
            args: a,
        } => format!("{}.{}({})", print_expr(callee), method, args(a)),
        Rhs::Get(e) => format!("{}.get", print_expr(e)),
        Rhs::New { class, args: a } => format!("new {}({})", class, args(a)),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(true) => "True".into(),
        Expr::Bool(false) => "False".into(),
        Expr::Unit => "unit".into(),
        Expr::Null => "null".into(),
        Expr::This => "this".into(),
        Expr::Var(v) => v.clone(),
        Expr::Field(f) => format!("this.{f}"),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            match **inner {
                Expr::Int(_) | Expr::Cond(..) | Expr::Unary(..) => {
                    format!("{sym}({})", print_expr(inner))
                }
                _ => format!("{sym}{}", print_expr(inner)),
            }
        }
        Expr::Binary(op, a, b) => {
            format!("( {} {} {} )", operand(a), op.symbol(), operand(b))
        }
        Expr::Cond(c, a, b) => format!(
            "if {} then {} else {}",
            operand(c),
            print_expr(a),
            print_expr(b)
        ),
        Expr::Apply(f, args) => format!(
            "{}({})",
            f,
            args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn operand(e: &Expr) -> String {
    match e {
        Expr::Cond(..) => format!("({})", print_expr(e)),
        _ => print_expr(e),
    }
}
