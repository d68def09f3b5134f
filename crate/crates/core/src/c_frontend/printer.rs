//! Pretty-printer producing source that re-parses to an equal AST.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &CProgram) -> String {
    let mut out = String::new();
    for d in &p.model_fn_defs {
        let _ = writeln!(out, "/*@ ABS {}; @*/", d.text);
    }
    for g in &p.globals {
        if let Some(inv) = &g.strong_invariant {
            let _ = write!(out, "/*@ strong global invariant {}; @*/ ", print_spec(inv));
        }
        let _ = write!(out, "{} {}", g.ty, g.name);
        for d in &g.ty.array_dims {
            match d {
                Some(n) => {
                    let _ = write!(out, "[{n}]");
                }
                None => out.push_str("[]"),
            }
        }
        if let Some(init) = &g.init {
            let _ = write!(out, " = {}", print_expr(init));
        }
        out.push_str(";\n");
    }
    for f in &p.functions {
        print_function(f, &mut out);
    }
    out
}

fn print_function(f: &CFunction, out: &mut String) {
    if let Some(c) = &f.contract {
        out.push_str("/*@");
        for r in &c.requires {
            let _ = write!(out, " requires {};", print_spec(r));
        }
        for e in &c.ensures {
            let _ = write!(out, " ensures {};", print_spec(e));
        }
        out.push_str(" @*/\n");
    }
    let params = if f.params.is_empty() {
        "void".to_string()
    } else {
        f.params
            .iter()
            .map(|p| format!("{} {}", p.ty, p.name))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(out, "{} {}({}) {{", f.return_ty, f.name, params);
    for s in &f.body {
        print_stmt(s, 1, out);
    }
    out.push_str("}\n");
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_stmt(s: &CStmt, level: usize, out: &mut String) {
    indent(level, out);
    match &s.kind {
        CStmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", print_expr(e));
        }
        CStmtKind::Decl { name, ty, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(e) = init {
                let _ = write!(out, " = {}", print_expr(e));
            }
            out.push_str(";\n");
        }
        CStmtKind::Return(None) => out.push_str("return;\n"),
        CStmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", print_expr(e));
        }
        CStmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ({})", print_expr(cond));
            print_branch(then_branch, level, out);
            if let Some(e) = else_branch {
                indent(level, out);
                out.push_str("else\n");
                print_branch(e, level, out);
            }
        }
        CStmtKind::While {
            cond,
            body,
            invariants,
        } => {
            if !invariants.is_empty() {
                out.push_str("/*@");
                for inv in invariants {
                    let _ = write!(out, " loop invariant {};", print_spec(inv));
                }
                out.push_str(" @*/\n");
                indent(level, out);
            }
            let _ = writeln!(out, "while ({})", print_expr(cond));
            print_branch(body, level, out);
        }
        CStmtKind::Compound(items) => {
            out.push_str("{\n");
            for s in items {
                print_stmt(s, level + 1, out);
            }
            indent(level, out);
            out.push_str("}\n");
        }
        CStmtKind::Empty => out.push_str(";\n"),
    }
}

/// Branches are always braced so a dangling `else` cannot re-associate;
/// an existing compound is printed as is.
fn print_branch(s: &CStmt, level: usize, out: &mut String) {
    if matches!(s.kind, CStmtKind::Compound(_)) {
        print_stmt(s, level, out);
    } else {
        // Wrapping would change the AST, so print the bare statement on its
        // own line; `if` nests correctly because every if prints its else
        // immediately after its then-branch.
        print_stmt(s, level + 1, out);
    }
}

pub fn print_expr(e: &CExpr) -> String {
    match &e.kind {
        CExprKind::IntLit(v) => v.to_string(),
        CExprKind::Var(v) => v.clone(),
        CExprKind::Assign { target, value } => format!("({} = {})", target, print_expr(value)),
        CExprKind::Binary { op, lhs, rhs } => {
            format!("({} {} {})", print_expr(lhs), op.symbol(), print_expr(rhs))
        }
        CExprKind::Logical { op, lhs, rhs } => {
            format!("({} {} {})", print_expr(lhs), op.symbol(), print_expr(rhs))
        }
        CExprKind::Call { name, args } => format!(
            "{}({})",
            name,
            args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        CExprKind::Unsupported {
            construct,
            operands,
        } => format!(
            "/* unsupported {} */ ({})",
            construct,
            operands
                .iter()
                .map(print_expr)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

pub fn print_spec(e: &SpecExpr) -> String {
    match e {
        SpecExpr::Int(v) if *v < 0 => format!("({v})"),
        SpecExpr::Int(v) => v.to_string(),
        SpecExpr::Bool(true) => "\\true".into(),
        SpecExpr::Bool(false) => "\\false".into(),
        SpecExpr::Var(v) => v.clone(),
        SpecExpr::Result => "\\result".into(),
        SpecExpr::Not(inner) => format!("!{}", print_spec(inner)),
        SpecExpr::Binary { op, lhs, rhs } => {
            let sym = match op {
                SpecBinOp::Arith(op) => op.symbol(),
                SpecBinOp::And => "&&",
                SpecBinOp::Or => "||",
                SpecBinOp::Implies => "==>",
            };
            format!("({} {} {})", print_spec(lhs), sym, print_spec(rhs))
        }
        SpecExpr::Call { name, args } => format!(
            "{}({})",
            name,
            args.iter().map(print_spec).collect::<Vec<_>>().join(", ")
        ),
    }
}
