use uvc_core::abs_ir::*;

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn fold_model_parses_and_typechecks() {
    let m = parse_model(&data("fold.abs")).unwrap();
    let names: Vec<_> = m.interfaces.iter().map(|i| i.name.as_str()).collect();
    assert_eq!(names, ["Fold", "Comp"]);
    assert_eq!(m.classes.len(), 2);
    assert!(matches!(m.main_block.last(), Some(Stmt::Await(g)) if g.len() == 2));
    assert_eq!(typecheck(&m), vec![]);
}

#[test]
fn fib_model_parses_and_typechecks() {
    let m = parse_model(&data("fib_model.abs")).unwrap();
    assert_eq!(m.module, "TestModule");
    assert_eq!(m.classes.len(), 5);
    assert!(m.main_block.is_empty());
    assert_eq!(typecheck(&m), vec![]);
}

#[test]
fn empty_module() {
    let m = parse_model("module M; { }").unwrap();
    assert!(typecheck(&m).is_empty());
    assert_eq!(
        print_model(&m).split_whitespace().collect::<Vec<_>>(),
        ["module", "M;", "{", "}"]
    );
}

#[test]
fn round_trip() {
    for f in ["fold.abs", "fib_model.abs"] {
        let m = parse_model(&data(f)).unwrap();
        let text = print_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m, "{f}");
        let n = normalize(&m);
        assert_eq!(parse_model(&print_model(&n)).unwrap(), n, "{f}");
    }
}

#[test]
fn normalize_is_idempotent() {
    for f in ["fold.abs", "fib_model.abs"] {
        let n = normalize(&parse_model(&data(f)).unwrap());
        assert_eq!(normalize(&n), n, "{f}");
        assert!(typecheck(&n).is_empty(), "{f}: {:?}", typecheck(&n));
    }
}

#[test]
fn normalize_names_bare_get() {
    let n = normalize(&parse_model(&data("fib_model.abs")).unwrap());
    let c = n.class("C_id_set_x").unwrap();
    let body = &c.method("set_global_x_val").unwrap().body;
    let text: Vec<String> = body
        .iter()
        .map(|s| {
            let mut o = String::new();
            print_stmt(s, 0, &mut o);
            o.trim().to_string()
        })
        .collect();
    assert_eq!(
        text,
        [
            "Fut<Unit> futureResult = this.global!set_x(value);",
            "Unit tmp_1 = futureResult.get;",
            "return unit;"
        ]
    );
}

#[test]
fn fold_body_already_normal() {
    let m = parse_model(&data("fold.abs")).unwrap();
    let n = normalize(&m);
    assert_eq!(
        n.class("FoldC").unwrap().method("fold").unwrap().body,
        m.class("FoldC").unwrap().method("fold").unwrap().body
    );
}

#[test]
fn sync_call_is_split() {
    let src = "module M;
interface I { Int f(Int a); }
class C implements I { Int f(Int a){ Int r = this.f(a); return this.f(r); } }
{ }";
    let m = parse_model(src).unwrap();
    assert!(typecheck(&m).is_empty());
    let n = normalize(&m);
    let mut text = String::new();
    for s in &n.class("C").unwrap().method("f").unwrap().body {
        print_stmt(s, 0, &mut text);
    }
    assert_eq!(
        text,
        "Fut<Int> tmp_1 = this!f(a);\nInt r = tmp_1.get;\nFut<Int> tmp_2 = this!f(r);\nInt tmp_3 = tmp_2.get;\nreturn tmp_3;\n"
    );
}

#[test]
fn guard_over_non_future_rejected() {
    let src = "module M;
interface I { Int f(); }
class C implements I { Int f(){ await 5?; return 0; } }
{ }";
    let d = typecheck(&parse_model(src).unwrap());
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains("not a future"), "{}", d[0].message);
}

#[test]
fn unknown_identifier_in_ensures() {
    let src = "module M;
interface I { [Spec : Ensures(result2 == 0)] Int f(); }
class C implements I { Int f(){ return 0; } }
{ }";
    let d = typecheck(&parse_model(src).unwrap());
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].kind, uvc_core::DiagnosticKind::UnknownIdentifier);
}

#[test]
fn value_of_only_in_specs() {
    let src = "module M;
interface I { Int f(Fut<Int> x); }
class C implements I { Int f(Fut<Int> x){ return valueOf(x); } }
{ }";
    assert!(!typecheck(&parse_model(src).unwrap()).is_empty());
}

#[test]
fn requires_cannot_mention_result() {
    let src = "module M;
interface I { [Spec : Requires(result == 0)] Int f(); }
class C implements I { Int f(){ return 0; } }
{ }";
    assert!(!typecheck(&parse_model(src).unwrap()).is_empty());
}

#[test]
fn object_invariant_over_fields_only() {
    let src = "module M;
interface I { Int f(Int a); }
[Spec : ObjInv(a > 0)]
class C implements I { Int f(Int a){ return a; } }
{ }";
    assert!(!typecheck(&parse_model(src).unwrap()).is_empty());
}

#[test]
fn parameter_requires_moves_to_interface() {
    let src = "module M;
interface I { Int f(Int a); }
class C implements I { Int g = 0; [Spec : Requires(a > 0)] [Spec : Requires(g > 0)] Int f(Int a){ return a; } }
{ }";
    let n = normalize(&parse_model(src).unwrap());
    assert_eq!(n.interface("I").unwrap().methods[0].specs.len(), 1);
    assert_eq!(n.class("C").unwrap().methods[0].sig.specs.len(), 1);
    assert_eq!(normalize(&n), n);
}

#[test]
fn syntax_error_has_position() {
    let e = parse_model("module M;\ninterface I { Int f( }").unwrap_err();
    assert_eq!(e.pos.line, 2);
}
