//! Active-object model IR: syntax tree, textual form, checks and
//! normalization.

pub mod ast;
pub mod normalize;
pub mod parser;
pub mod printer;
pub mod typecheck;

use std::collections::BTreeMap;

pub use ast::*;
pub use normalize::normalize;
pub use parser::{parse_expr, parse_fundef, parse_model};
pub use printer::{print_expr, print_model, print_rhs, print_spec, print_stmt};
pub use typecheck::typecheck;

/// Renames local variables throughout a statement list.
pub fn rename_vars(body: &[Stmt], f: &dyn Fn(&str) -> Option<String>) -> Vec<Stmt> {
    let re = |e: &Expr| e.map_vars(&|v| f(v).map(Expr::Var));
    let rn = |v: &String| f(v).unwrap_or_else(|| v.clone());
    let rhs = |r: &Rhs| match r {
        Rhs::Expr(e) => Rhs::Expr(re(e)),
        Rhs::AsyncCall {
            callee,
            method,
            args,
        } => Rhs::AsyncCall {
            callee: re(callee),
            method: method.clone(),
            args: args.iter().map(re).collect(),
        },
        Rhs::SyncCall {
            callee,
            method,
            args,
        } => Rhs::SyncCall {
            callee: re(callee),
            method: method.clone(),
            args: args.iter().map(re).collect(),
        },
        Rhs::Get(e) => Rhs::Get(re(e)),
        Rhs::New { class, args } => Rhs::New {
            class: class.clone(),
            args: args.iter().map(re).collect(),
        },
    };
    body.iter()
        .map(|s| match s {
            Stmt::VarDecl { ty, name, init } => Stmt::VarDecl {
                ty: ty.clone(),
                name: rn(name),
                init: init.as_ref().map(rhs),
            },
            Stmt::Assign { target, value } => Stmt::Assign {
                target: match target {
                    Target::Var(v) => Target::Var(rn(v)),
                    t => t.clone(),
                },
                value: rhs(value),
            },
            Stmt::Rhs(r) => Stmt::Rhs(rhs(r)),
            Stmt::Await(g) => Stmt::Await(g.iter().map(re).collect()),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => Stmt::If {
                cond: re(cond),
                then_branch: rename_vars(then_branch, f),
                else_branch: else_branch.as_ref().map(|e| rename_vars(e, f)),
            },
            Stmt::While {
                cond,
                invariants,
                body,
            } => Stmt::While {
                cond: re(cond),
                invariants: invariants.iter().map(re).collect(),
                body: rename_vars(body, f),
            },
            Stmt::Return(r) => Stmt::Return(rhs(r)),
            Stmt::Skip => Stmt::Skip,
            Stmt::Block(b) => Stmt::Block(rename_vars(b, f)),
        })
        .collect()
}

/// Declared local names in order of declaration.
pub fn declared_locals(body: &[Stmt], out: &mut Vec<String>) {
    for s in body {
        match s {
            Stmt::VarDecl { name, .. } => out.push(name.clone()),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                declared_locals(then_branch, out);
                if let Some(e) = else_branch {
                    declared_locals(e, out);
                }
            }
            Stmt::While { body, .. } | Stmt::Block(body) => declared_locals(body, out),
            _ => {}
        }
    }
}

/// A canonical form for comparing models up to declaration order and the
/// numbering of `tmp_N` temporaries: declarations are sorted by name and
/// temporaries renumbered by order of declaration within each method.
pub fn canonical_form(m: &AbsModel) -> AbsModel {
    let mut c = m.clone();
    c.interfaces.sort_by(|a, b| a.name.cmp(&b.name));
    for i in &mut c.interfaces {
        i.methods.sort_by(|a, b| a.name.cmp(&b.name));
    }
    c.classes.sort_by(|a, b| a.name.cmp(&b.name));
    for class in &mut c.classes {
        class.methods.sort_by(|a, b| a.sig.name.cmp(&b.sig.name));
        for method in &mut class.methods {
            let mut locals = Vec::new();
            declared_locals(&method.body, &mut locals);
            let map: BTreeMap<String, String> = locals
                .into_iter()
                .filter(|n| is_temp(n))
                .enumerate()
                .map(|(k, n)| (n, format!("tmp_{}", k + 1)))
                .collect();
            method.body = rename_vars(&method.body, &|v| map.get(v).cloned());
        }
    }
    c
}

fn is_temp(name: &str) -> bool {
    name.strip_prefix("tmp_")
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Whether two models are equal up to declaration order and temporary
/// numbering.
pub fn alpha_equivalent(a: &AbsModel, b: &AbsModel) -> bool {
    canonical_form(a) == canonical_form(b)
}
