use proptest::prelude::*;

use uvc_core::abs_ir::{normalize, parse_model, AbsModel};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::extractor::extract_model;
use uvc_core::prover::{
    apply_updates, generate_obligations, symbolic_execute, Formula, Op, PoKind, ProofObligation,
    ProverError, Sort, Subst, Term, Update,
};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn model(name: &str) -> AbsModel {
    let m = if name.ends_with(".c") {
        extract_model(&parse_translation_unit(&data(name)).unwrap().program).unwrap()
    } else {
        parse_model(&data(name)).unwrap()
    };
    normalize(&m)
}

fn po<'a>(pos: &'a [ProofObligation], class: &str, method: &str) -> &'a ProofObligation {
    pos.iter()
        .find(|p| p.class == class && p.method == method)
        .unwrap_or_else(|| panic!("no obligation {class}.{method}"))
}

fn int_var(n: &str) -> Term {
    Term::pvar(n, Sort::Int)
}

#[test]
fn elementary_update_substitutes() {
    let f = Formula::update(
        Update::assign("v", Term::Int(1)),
        Formula::eq(int_var("v"), Term::Int(1)),
    );
    assert_eq!(apply_updates(&f), Formula::True);
    let g = Formula::update(
        Update::assign("v", int_var("w")),
        Formula::eq(int_var("v"), Term::Int(1)),
    );
    assert_eq!(apply_updates(&g), Formula::eq(int_var("w"), Term::Int(1)));
}

#[test]
fn select_over_store() {
    let stored = Term::Store(Box::new(Term::heap()), "x".into(), Box::new(Term::Int(0)));
    let t = Term::Upd(
        Box::new(Update::assign("heap", stored)),
        Box::new(Term::select(Term::heap(), "x", Sort::Int)),
    );
    assert_eq!(t.subst(&Subst::new()), Term::Int(0));

    let other = Term::Store(Box::new(Term::heap()), "y".into(), Box::new(Term::Int(5)));
    let t = Term::Upd(
        Box::new(Update::assign("heap", other)),
        Box::new(Term::select(Term::heap(), "x", Sort::Int)),
    );
    assert_eq!(
        t.subst(&Subst::new()),
        Term::select(Term::heap(), "x", Sort::Int)
    );
}

#[test]
fn parallel_update_right_wins() {
    let u = Update::par(
        Update::assign("v", Term::Int(1)),
        Update::assign("v", Term::Int(2)),
    );
    let t = Term::Upd(Box::new(u), Box::new(int_var("v")));
    assert_eq!(t.subst(&Subst::new()), Term::Int(2));
}

#[test]
fn sequential_update_composes() {
    // {v := 1}{w := v + 1} w  ==  2
    let u = Update::seq(
        Update::assign("v", Term::Int(1)),
        Update::assign("w", Term::bin(Op::Add, int_var("v"), Term::Int(1))),
    );
    let t = Term::Upd(Box::new(u), Box::new(int_var("w")));
    assert_eq!(t.subst(&Subst::new()), Term::Int(2));
}

#[test]
fn substitution_avoids_capture() {
    // {v := x} (exists x. x > v): the bound x must not capture the free one.
    let body = Formula::atom(Term::bin(
        Op::Gt,
        Term::LVar("x".into(), Sort::Int),
        int_var("v"),
    ));
    let f = Formula::update(
        Update::assign("v", Term::LVar("x".into(), Sort::Int)),
        Formula::Exists("x".into(), Sort::Int, Box::new(body)),
    );
    match apply_updates(&f) {
        Formula::Exists(y, _, inner) => {
            assert_ne!(y, "x");
            let want = Formula::atom(Term::bin(
                Op::Gt,
                Term::LVar(y.clone(), Sort::Int),
                Term::LVar("x".into(), Sort::Int),
            ));
            assert_eq!(*inner, want);
        }
        other => panic!("{other}"),
    }
}

#[test]
fn fold_obligation_matches_example() {
    let m = model("fold.abs");
    let pos = generate_obligations(&m).unwrap();
    let fold = po(&pos, "FoldC", "fold");
    assert_eq!(fold.kind, PoKind::MethodContract);
    assert_eq!(
        fold.antecedent.to_string(),
        "((select(heap, comp) != null) && (((a > 0) && (b > 0)) && (c > 0)))"
    );
    assert_eq!(
        fold.contract.inv.to_string(),
        "(select(heap, comp) != null)"
    );
    assert_eq!(fold.contract.post.to_string(), "(result > 0)");
    assert_eq!(fold.contract.stmt_post, Formula::True);
    let op = &fold.contract.callees["Comp.op"];
    assert_eq!(op.pre.to_string(), "((a > 0) && (b > 0))");
    assert_eq!(op.post.to_string(), "(result > 0)");
}

#[test]
fn fold_goals_use_callee_contract() {
    let m = model("fold.abs");
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "FoldC", "fold")).unwrap();
    let origins: Vec<&str> = goals.iter().map(|g| g.origin.as_str()).collect();
    assert_eq!(origins.len(), 3, "{origins:?}");
    assert!(origins[0].starts_with("call: precondition of Comp.op"));
    assert!(origins[1].starts_with("call: precondition of Comp.op"));
    assert!(origins[2].starts_with("return"));
    // The second call's precondition mentions the value of the first future.
    assert_eq!(
        goals[1].delta[0].to_string(),
        "((val(fut!1) > 0) && (c > 0))"
    );
    assert!(goals[2]
        .gamma
        .iter()
        .any(|f| f.to_string() == "(val(fut!2) > 0)"));
}

#[test]
fn global_init_obligation() {
    let m = model("fib.c");
    let pos = generate_obligations(&m).unwrap();
    let init = po(&pos, "Global", "<init>");
    assert_eq!(init.kind, PoKind::ClassInitialization);
    assert_eq!(init.antecedent.to_string(), "(select(heap, x) == 0)");
    assert_eq!(
        init.contract.inv.to_string(),
        "((select(heap, x) == 0) || (select(heap, x) == 1))"
    );
    let goals = symbolic_execute(init).unwrap();
    assert_eq!(goals.len(), 1);
}

#[test]
fn one_obligation_per_method_and_class() {
    let m = model("fib.c");
    let pos = generate_obligations(&m).unwrap();
    let methods: usize = m.classes.iter().map(|c| c.methods.len()).sum();
    assert_eq!(pos.len(), methods + m.classes.len());
    for p in &pos {
        assert!(!p.formula().has_update());
    }
}

#[test]
fn return_goal_substitutes_result() {
    let src = "module M;
interface I {
  [Spec : Ensures(( ( result == 1 ) || ( result == 2 ) ))]
  Int m();
}
class C implements I {
  Int m(){ Int funcResult = 2; return funcResult; }
}
{ }";
    let m = normalize(&parse_model(src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    // The literal goal `2 == 1 || 2 == 2` folds to true and is not emitted.
    assert!(symbolic_execute(po(&pos, "C", "m")).unwrap().is_empty());

    let src = src.replace("Int funcResult = 2;", "Int funcResult = 3;");
    let m = normalize(&parse_model(&src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C", "m")).unwrap();
    assert_eq!(goals.len(), 1);
    assert_eq!(goals[0].delta, vec![Formula::False]);
}

#[test]
fn op_plus_goal_is_a_tautology() {
    let m = model("fib.c");
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C_one_or_two", "op_plus_fut_fut")).unwrap();
    let ret = goals
        .iter()
        .find(|g| g.origin.starts_with("return"))
        .unwrap();
    let text = ret.delta[0].to_string();
    assert!(
        text.contains("((val(fut_arg1) + val(fut_arg2)) == (val(fut_arg1) + val(fut_arg2)))"),
        "{text}"
    );
}

#[test]
fn default_contracts_give_trivial_goals() {
    let src = "module M;
interface I { Int m(Int a); }
class C implements I {
  Int m(Int a){ Fut<Int> f = this!m(a); await f?; Int r = f.get; return r; }
}
{ }";
    let m = normalize(&parse_model(src).unwrap());
    for p in generate_obligations(&m).unwrap() {
        let goals = symbolic_execute(&p).unwrap();
        assert!(goals.is_empty(), "unexpected goal {}", goals[0]);
    }
}

#[test]
fn await_anonymizes_the_heap() {
    let src = "module M;
interface I {
  [Spec : Ensures(( result == 0 ))]
  Int m();
}
class C implements I {
  Int f = 0;
  Int m(){ this.f = 0; Fut<Int> g = this!m(); await g?; return this.f; }
}
{ }";
    let m = normalize(&parse_model(src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C", "m")).unwrap();
    let ret = goals
        .iter()
        .find(|g| g.origin.starts_with("return"))
        .unwrap();
    assert_eq!(ret.delta[0].to_string(), "(select(heap!2, f) == 0)");
}

#[test]
fn loop_rule_premises() {
    let src = "module M;
interface I {
  [Spec : Requires(( n >= 0 ))]
  [Spec : Ensures(( result == n ))]
  Int m(Int n);
}
class C implements I {
  Int m(Int n){
    Int i = 0;
    [Spec : WhileInv(( ( i <= n ) && ( i >= 0 ) ))]
    while ( ( i < n ) ){ i = ( i + 1 ); }
    return i;
  }
}
{ }";
    let m = normalize(&parse_model(src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C", "m")).unwrap();
    let origins: Vec<&str> = goals.iter().map(|g| g.origin.as_str()).collect();
    assert_eq!(
        origins,
        vec![
            "loop: invariant initially valid",
            "skip: statement postcondition",
            "return: postcondition (return i;)"
        ]
    );
    // Preservation goal is stated over the anonymized counter.
    assert_eq!(
        goals[1].delta[0].to_string(),
        "(((i!1 + 1) <= n) && ((i!1 + 1) >= 0))"
    );
}

#[test]
fn division_guard() {
    let src = "module M;
interface I { Int m(Int a, Int b); }
class C implements I {
  Int m(Int a, Int b){ Int q = ( a / b ); return q; }
}
{ }";
    let m = normalize(&parse_model(src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C", "m")).unwrap();
    assert_eq!(goals.len(), 1);
    assert_eq!(goals[0].delta[0].to_string(), "(b != 0)");
}

#[test]
fn creation_precondition_is_checked() {
    let m = model("fold.abs");
    let src = "module M;
interface I { Int m(); }
[Spec : Requires(( this.k > 0 ))]
class C(Int k) implements I {
  Int m(){ I o = new C(0); return 1; }
}
{ }";
    let _ = m;
    let m = normalize(&parse_model(src).unwrap());
    let pos = generate_obligations(&m).unwrap();
    let goals = symbolic_execute(po(&pos, "C", "m")).unwrap();
    assert_eq!(goals.len(), 1);
    assert_eq!(goals[0].delta, vec![Formula::False]);
}

#[test]
fn unnormalized_sync_call_is_rejected() {
    let src = "module M;
interface I { Int m(); }
class C implements I {
  Int m(){ Int r = this.m(); return r; }
}
{ }";
    let m = parse_model(src).unwrap();
    let pos = generate_obligations(&m).unwrap();
    let err = symbolic_execute(po(&pos, "C", "m")).unwrap_err();
    assert!(matches!(err, ProverError::UnknownStatementForm(_)));
}

#[test]
fn goals_are_modality_and_update_free() {
    for f in ["fib.c", "order.c", "order_contract.c", "fold.abs"] {
        let m = model(f);
        for p in generate_obligations(&m).unwrap() {
            for g in symbolic_execute(&p).unwrap() {
                for h in g.gamma.iter().chain(&g.delta) {
                    assert!(!h.has_modality() && !h.has_update(), "{f}: {g}");
                }
            }
        }
    }
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(Term::Int),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(int_var),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (
            prop::sample::select(vec![Op::Add, Op::Sub, Op::Mul]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, a, b)| Term::bin(op, a, b))
    })
}

fn eval(t: &Term, env: &dyn Fn(&str) -> i64) -> i64 {
    match t {
        Term::Int(v) => *v,
        Term::PVar(n, _) => env(n),
        Term::App(op, args) => {
            let a = eval(&args[0], env);
            let b = eval(&args[1], env);
            match op {
                Op::Add => a.wrapping_add(b),
                Op::Sub => a.wrapping_sub(b),
                Op::Mul => a.wrapping_mul(b),
                _ => unreachable!(),
            }
        }
        _ => unreachable!("{t}"),
    }
}

proptest! {
    #[test]
    fn update_is_substitution(t in arb_term(), ta in arb_term(), va in -5i64..5, vb in -5i64..5, vc in -5i64..5) {
        let env = |n: &str| match n { "a" => va, "b" => vb, _ => vc };
        // [[{a := ta} t]](s) == [[t]](s[a := [[ta]](s)])
        let lhs = Term::Upd(Box::new(Update::assign("a", ta.clone())), Box::new(t.clone())).subst(&Subst::new());
        let a_val = eval(&ta, &env);
        let env2 = |n: &str| if n == "a" { a_val } else { env(n) };
        prop_assert_eq!(eval(&lhs, &env), eval(&t, &env2));
    }

    #[test]
    fn apply_updates_is_idempotent(t in arb_term(), ta in arb_term(), tb in arb_term()) {
        let u = Update::par(Update::assign("a", ta), Update::assign("b", tb));
        let f = Formula::update(u, Formula::atom(Term::bin(Op::Le, t, Term::Int(0))));
        let once = apply_updates(&f);
        prop_assert!(!once.has_update());
        prop_assert_eq!(apply_updates(&once), once.clone());
    }

    #[test]
    fn right_override(t1 in arb_term(), t2 in arb_term(), t in arb_term()) {
        let par = Update::par(Update::assign("a", t1), Update::assign("a", t2.clone()));
        let lhs = Term::Upd(Box::new(par), Box::new(t.clone())).subst(&Subst::new());
        let rhs = Term::Upd(Box::new(Update::assign("a", t2)), Box::new(t)).subst(&Subst::new());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn select_store_law(v in -100i64..100, w in -100i64..100, same in any::<bool>()) {
        let g = if same { "x" } else { "y" };
        let h = Term::Store(
            Box::new(Term::Store(Box::new(Term::heap()), "x".into(), Box::new(Term::Int(v)))),
            g.into(),
            Box::new(Term::Int(w)),
        );
        let t = Term::Upd(Box::new(Update::assign("heap", h)), Box::new(Term::select(Term::heap(), "x", Sort::Int)));
        prop_assert_eq!(t.subst(&Subst::new()), Term::Int(if same { w } else { v }));
    }
}
