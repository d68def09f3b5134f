//! Concrete evaluation of pure expressions.

use crate::abs_ir::{BinOp, Expr, FunDef, UnOp};

use super::program::Value;

const MAX_CALL_DEPTH: usize = 10_000;

pub trait Scope {
    /// A local variable.
    fn local(&self, name: &str) -> Option<Value>;
    fn field(&self, name: &str) -> Option<Value>;
    fn this(&self) -> Option<Value>;
    /// `None` if the future does not exist, `Some(None)` if unresolved.
    fn future(&self, id: usize) -> Option<Option<Value>>;
}

struct FunScope<'a> {
    params: Vec<(&'a str, Value)>,
}

impl Scope for FunScope<'_> {
    fn local(&self, name: &str) -> Option<Value> {
        self.params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
    }
    fn field(&self, _: &str) -> Option<Value> {
        None
    }
    fn this(&self) -> Option<Value> {
        None
    }
    fn future(&self, _: usize) -> Option<Option<Value>> {
        None
    }
}

pub struct Evaluator<'a> {
    pub functions: &'a [FunDef],
}

fn int(v: Value) -> Result<i64, String> {
    match v {
        Value::Int(n) => Ok(n),
        other => Err(format!("expected an integer, found {other}")),
    }
}

fn boolean(v: Value) -> Result<bool, String> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(format!("expected a boolean, found {other}")),
    }
}

fn overflow() -> String {
    "integer overflow".to_string()
}

impl Evaluator<'_> {
    pub fn eval(&self, e: &Expr, scope: &dyn Scope) -> Result<Value, String> {
        self.eval_at(e, scope, 0)
    }

    pub fn eval_bool(&self, e: &Expr, scope: &dyn Scope) -> Result<bool, String> {
        boolean(self.eval(e, scope)?)
    }

    fn eval_at(&self, e: &Expr, scope: &dyn Scope, depth: usize) -> Result<Value, String> {
        Ok(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Unit => Value::Unit,
            Expr::Null => Value::Null,
            Expr::This => scope.this().ok_or("`this` outside an object")?,
            Expr::Var(v) => scope
                .local(v)
                .or_else(|| scope.field(v))
                .ok_or_else(|| format!("unknown name {v}"))?,
            Expr::Field(f) => scope.field(f).ok_or_else(|| format!("unknown field {f}"))?,
            Expr::Unary(UnOp::Not, a) => Value::Bool(!boolean(self.eval_at(a, scope, depth)?)?),
            Expr::Unary(UnOp::Neg, a) => Value::Int(
                int(self.eval_at(a, scope, depth)?)?
                    .checked_neg()
                    .ok_or_else(overflow)?,
            ),
            Expr::Binary(BinOp::And, a, b) => Value::Bool(
                boolean(self.eval_at(a, scope, depth)?)?
                    && boolean(self.eval_at(b, scope, depth)?)?,
            ),
            Expr::Binary(BinOp::Or, a, b) => Value::Bool(
                boolean(self.eval_at(a, scope, depth)?)?
                    || boolean(self.eval_at(b, scope, depth)?)?,
            ),
            Expr::Binary(op, a, b) => {
                let x = self.eval_at(a, scope, depth)?;
                let y = self.eval_at(b, scope, depth)?;
                binary(*op, x, y)?
            }
            Expr::Cond(c, a, b) => {
                if boolean(self.eval_at(c, scope, depth)?)? {
                    self.eval_at(a, scope, depth)?
                } else {
                    self.eval_at(b, scope, depth)?
                }
            }
            Expr::Apply(name, args) if name == "valueOf" && args.len() == 1 => {
                match self.eval_at(&args[0], scope, depth)? {
                    Value::Fut(k) => scope
                        .future(k)
                        .ok_or_else(|| format!("unknown future f{k}"))?
                        .ok_or_else(|| format!("valueOf on unresolved future f{k}"))?,
                    other => return Err(format!("valueOf on non-future {other}")),
                }
            }
            Expr::Apply(name, args) => {
                let f = self
                    .functions
                    .iter()
                    .find(|f| &f.name == name)
                    .ok_or_else(|| format!("unknown function {name}"))?;
                if depth >= MAX_CALL_DEPTH {
                    return Err(format!("recursion limit in {name}"));
                }
                if f.params.len() != args.len() {
                    return Err(format!("arity mismatch calling {name}"));
                }
                let mut params = Vec::with_capacity(args.len());
                for (p, a) in f.params.iter().zip(args) {
                    params.push((p.name.as_str(), self.eval_at(a, scope, depth)?));
                }
                self.eval_at(&f.body, &FunScope { params }, depth + 1)?
            }
        })
    }
}

fn binary(op: BinOp, x: Value, y: Value) -> Result<Value, String> {
    use BinOp::*;
    Ok(match op {
        Eq => Value::Bool(x == y),
        Ne => Value::Bool(x != y),
        Lt | Gt | Le | Ge => {
            let (a, b) = (int(x)?, int(y)?);
            Value::Bool(match op {
                Lt => a < b,
                Gt => a > b,
                Le => a <= b,
                _ => a >= b,
            })
        }
        Add | Sub | Mul | Div | Mod => {
            let (a, b) = (int(x)?, int(y)?);
            if matches!(op, Div | Mod) && b == 0 {
                return Err("division by zero".into());
            }
            let r = match op {
                Add => a.checked_add(b),
                Sub => a.checked_sub(b),
                Mul => a.checked_mul(b),
                Div => a.checked_div(b),
                _ => a.checked_rem(b),
            };
            Value::Int(r.ok_or_else(overflow)?)
        }
        And | Or => unreachable!("short-circuit operators are handled by the caller"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abs_ir::{parse_expr, parse_fundef};

    struct Empty;
    impl Scope for Empty {
        fn local(&self, _: &str) -> Option<Value> {
            None
        }
        fn field(&self, _: &str) -> Option<Value> {
            None
        }
        fn this(&self) -> Option<Value> {
            None
        }
        fn future(&self, _: usize) -> Option<Option<Value>> {
            None
        }
    }

    #[test]
    fn arithmetic_and_functions() {
        let fib = parse_fundef("def Int fib(Int n) = if n <= 2 then 1 else fib(n-1) + fib(n-2);")
            .unwrap();
        let fs = [fib];
        let ev = Evaluator { functions: &fs };
        let e = |s: &str| ev.eval(&parse_expr(s).unwrap(), &Empty);
        assert_eq!(e("fib(5)").unwrap(), Value::Int(5));
        assert_eq!(e("-7 / 2").unwrap(), Value::Int(-3));
        assert_eq!(e("-7 % 2").unwrap(), Value::Int(-1));
        assert!(e("1 / 0").is_err());
        assert_eq!(e("False && 1 / 0 == 0").unwrap(), Value::Bool(false));
        assert!(e("9223372036854775807 + 1").is_err());
    }
}
