use std::time::Duration;

use uvc_core::abs_ir::{normalize, parse_fundef, parse_model, AbsModel};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::extractor::extract_model;
use uvc_core::prover::{Formula, Op, Sequent, Sort, Term};
use uvc_core::smt::{
    combine, dump_name, encode, encode_model, run_solver, verify_model, FunctionEncoding, SmtError,
    SolverConfig, SolverResult, Verdict,
};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn from_c(src: &str) -> AbsModel {
    normalize(&extract_model(&parse_translation_unit(src).unwrap().program).unwrap())
}

fn config() -> SolverConfig {
    SolverConfig {
        jobs: 4,
        ..SolverConfig::default()
    }
}

fn goal(delta: Formula) -> Sequent {
    Sequent {
        gamma: Vec::new(),
        delta: vec![delta],
        origin: "test".into(),
    }
}

fn fut(n: &str) -> Term {
    Term::Const(n.into(), Sort::Fut(Box::new(Sort::Int)))
}

#[test]
fn tautology_is_unsat() {
    let sum = Term::bin(Op::Add, Term::val(fut("f1")), Term::val(fut("f2")));
    let s = encode(
        &goal(Formula::eq(sum.clone(), sum)),
        &[],
        FunctionEncoding::Recursive,
    )
    .unwrap();
    assert_eq!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Unsat
    );
}

#[test]
fn contradiction_and_consistent_assertions() {
    let x = Term::pvar("x", Sort::Int);
    // Negation of `x == 1 -> x == 2` is satisfiable.
    let seq = Sequent {
        gamma: vec![Formula::eq(x.clone(), Term::Int(1))],
        delta: vec![Formula::eq(x.clone(), Term::Int(2))],
        origin: "t".into(),
    };
    let s = encode(&seq, &[], FunctionEncoding::Recursive).unwrap();
    assert!(matches!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Sat(Some(_))
    ));
    // `x == x` is valid.
    let s = encode(
        &goal(Formula::eq(x.clone(), x)),
        &[],
        FunctionEncoding::Recursive,
    )
    .unwrap();
    assert_eq!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Unsat
    );
}

#[test]
fn global_init_goal_literal() {
    let f = Formula::or(vec![
        Formula::eq(Term::Int(0), Term::Int(0)),
        Formula::eq(Term::Int(0), Term::Int(1)),
    ]);
    // Literal equalities fold; the encoded goal is still a valid script.
    let s = encode(&goal(f), &[], FunctionEncoding::Recursive).unwrap();
    assert_eq!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Unsat
    );
}

#[test]
fn fib_definition_is_recursive() {
    let fib =
        parse_fundef("def Int fib(Int n) = if n <= 2 then 1 else fib(n-1) + fib(n-2);").unwrap();
    let n = Term::pvar("n", Sort::Int);
    let g = Formula::eq(
        Term::Fun("fib".into(), Sort::Int, vec![Term::Int(5)]),
        Term::Int(5),
    );
    let s = encode(
        &goal(g.clone()),
        std::slice::from_ref(&fib),
        FunctionEncoding::Recursive,
    )
    .unwrap();
    let text = s.text();
    assert!(text.contains(
        "(define-fun-rec fun.fib ((?n Int)) Int\n  (ite (<= ?n 2) 1 (+ (fun.fib (- ?n 1)) (fun.fib (- ?n 2)))))"
    ), "{text}");
    assert_eq!(run_solver(&text, &config()).unwrap(), SolverResult::Unsat);

    let s = encode(
        &goal(g),
        std::slice::from_ref(&fib),
        FunctionEncoding::Axiom,
    )
    .unwrap();
    assert!(s.text().contains("(declare-fun fun.fib (Int) Int)"));
    assert_eq!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Unsat
    );

    // fib(n) >= 1 needs induction and is not claimed here; a false claim is Sat.
    let bad = Formula::eq(Term::Fun("fib".into(), Sort::Int, vec![n]), Term::Int(0));
    let s = encode(&goal(bad), &[fib], FunctionEncoding::Recursive).unwrap();
    assert!(matches!(
        run_solver(&s.text(), &config()).unwrap(),
        SolverResult::Sat(_)
    ));
}

#[test]
fn tiny_timeout_is_unknown() {
    let fib =
        parse_fundef("def Int fib(Int n) = if n <= 2 then 1 else fib(n-1) + fib(n-2);").unwrap();
    let g = Formula::eq(
        Term::Fun("fib".into(), Sort::Int, vec![Term::Int(30)]),
        Term::Int(832040),
    );
    let s = encode(&goal(g), &[fib], FunctionEncoding::Recursive).unwrap();
    let cfg = SolverConfig {
        timeout: Duration::from_millis(1),
        ..config()
    };
    assert_eq!(run_solver(&s.text(), &cfg).unwrap(), SolverResult::Unknown);
}

#[test]
fn missing_solver_is_reported() {
    let cfg = SolverConfig {
        path: "/nonexistent/solver".into(),
        ..config()
    };
    let err = run_solver("(check-sat)\n", &cfg).unwrap_err();
    assert!(matches!(err, SmtError::SolverUnavailable(_)));
}

#[test]
fn verdict_combination() {
    use Verdict::*;
    assert_eq!(combine([Valid, Valid]), Valid);
    assert_eq!(combine([Valid, Unknown]), Unknown);
    assert_eq!(combine([Unknown, NotValid, Valid]), NotValid);
    assert_eq!(combine([]), Valid);
}

#[test]
fn scripts_are_deterministic() {
    let a = encode_model(&from_c(&data("fib.c")), FunctionEncoding::Recursive).unwrap();
    let b = encode_model(&from_c(&data("fib.c")), FunctionEncoding::Recursive).unwrap();
    let flat = |v: &[uvc_core::smt::EncodedObligation]| {
        v.iter().flat_map(|p| p.scripts.clone()).collect::<Vec<_>>()
    };
    assert_eq!(flat(&a), flat(&b));
    assert!(!flat(&a).is_empty());
}

#[test]
fn dump_file_names() {
    assert_eq!(dump_name("C_main", "call", 2), "C_main.call.goal2.smt2");
    assert_eq!(dump_name("Global", "<init>", 1), "Global.init.goal1.smt2");
}

fn assert_all_valid(m: &AbsModel) {
    let reports = verify_model(m, &config()).unwrap();
    assert!(!reports.is_empty());
    for r in &reports {
        assert_eq!(r.verdict, Verdict::Valid, "{}", r.line());
    }
}

#[test]
fn fib_model_verifies() {
    assert_all_valid(&from_c(&data("fib.c")));
}

#[test]
fn order_contract_verifies() {
    assert_all_valid(&from_c(&data("order_contract.c")));
}

#[test]
fn fold_verifies() {
    assert_all_valid(&normalize(&parse_model(&data("fold.abs")).unwrap()));
}

#[test]
fn dump_writes_one_script_per_goal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SolverConfig {
        dump_dir: Some(dir.path().to_path_buf()),
        ..config()
    };
    let m = normalize(&parse_model(&data("fold.abs")).unwrap());
    let reports = verify_model(&m, &cfg).unwrap();
    let goals: usize = reports.iter().map(|r| r.goals.len()).sum();
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, goals);
    assert!(dir.path().join("FoldC.fold.goal1.smt2").exists());
}

fn not_valid(m: &AbsModel, class: &str, method: &str) -> bool {
    verify_model(m, &config())
        .unwrap()
        .iter()
        .any(|r| r.class == class && r.method == method && r.verdict == Verdict::NotValid)
}

#[test]
fn mutated_contracts_fail() {
    let fib = data("fib.c");
    let cases = [
        (
            "ensures \\result == 1 || \\result == 2;",
            "ensures \\result == 2;",
            "C_one_or_two",
        ),
        (
            "ensures \\result == val - 1 || \\result == val;",
            "ensures \\result == val;",
            "C_pred_or_id",
        ),
        (
            "ensures \\result >= 1 && \\result <= fib(n);",
            "ensures \\result == 1;",
            "C_one_to_fib",
        ),
        (
            "ensures \\result == val;",
            "ensures \\result == val && val == 0;",
            "C_id_set_x",
        ),
    ];
    for (from, to, class) in cases {
        assert!(fib.contains(from));
        let m = from_c(&fib.replacen(from, to, 1));
        assert!(
            not_valid(&m, class, "call"),
            "mutant {to} on {class} verified"
        );
    }
    let order2 = data("order_contract.c").replace(
        "ensures \\result == 1 || \\result == 2;",
        "ensures \\result == 2;",
    );
    assert!(not_valid(&from_c(&order2), "C_main", "call"));
}
