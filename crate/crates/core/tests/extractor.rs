use uvc_core::abs_ir::{
    self, alpha_equivalent, canonical_form, parse_model, print_model, typecheck, Stmt,
};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::extractor::{extract_model, ExtractError};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn extract_src(src: &str) -> Result<abs_ir::AbsModel, ExtractError> {
    let p = parse_translation_unit(src).unwrap().program;
    extract_model(&p)
}

fn extract(name: &str) -> abs_ir::AbsModel {
    extract_src(&data(name)).unwrap()
}

fn method_names(m: &abs_ir::AbsModel, class: &str) -> Vec<String> {
    let mut v: Vec<String> = m
        .class(class)
        .unwrap()
        .methods
        .iter()
        .map(|m| m.sig.name.clone())
        .collect();
    v.sort();
    v
}

#[test]
fn golden_fib_model() {
    let got = extract("fib.c");
    let want = parse_model(&data("fib_model.abs")).unwrap();
    if !alpha_equivalent(&got, &want) {
        let a = print_model(&canonical_form(&got));
        let b = print_model(&canonical_form(&want));
        for (x, y) in a.lines().zip(b.lines()) {
            assert_eq!(x, y);
        }
        panic!("models differ");
    }
}

#[test]
fn golden_spec_text_verbatim() {
    let text = print_model(&extract("fib.c"));
    for s in [
        "[Spec : Ensures(( ( result >= 1 ) && ( result <= fib(n) ) ))]",
        "[Spec : Ensures(( ( result == ( valueOf(fut_arg1) - 1 ) ) || ( result == valueOf(fut_arg1) ) ))]",
        "[Spec : ObjInv(( ( this.x == 0 ) || ( this.x == 1 ) ))]",
        "[Spec : Ensures(( result == ( arg1 - valueOf(fut_arg2) ) ))]",
        "Int tmp_20 = if ( n > 3 ) then 1 else 0;",
    ] {
        assert!(text.contains(s), "missing {s}");
    }
}

#[test]
fn extracted_models_typecheck() {
    for f in ["fib.c", "order.c", "order_contract.c"] {
        let m = extract(f);
        assert_eq!(typecheck(&m), vec![], "{f}");
        let n = abs_ir::normalize(&m);
        assert_eq!(typecheck(&n), vec![], "{f}");
    }
}

#[test]
fn order_main_class_methods() {
    let m = extract("order.c");
    assert_eq!(
        method_names(&m, "C_main"),
        [
            "call",
            "call_id_set_x_val_0",
            "get_global_x",
            "op_plus_fut_fut",
            "set_global_x_val"
        ]
    );
    // No main block without main; with main, Global and C_main are created.
    assert!(matches!(m.main_block.last(), Some(Stmt::Await(_))));
}

#[test]
fn order_contract_specs() {
    let text = print_model(&extract("order_contract.c"));
    let i_main = text.split("interface I_main").nth(1).unwrap();
    let i_main = &i_main[..i_main.find('}').unwrap()];
    assert!(i_main.contains("[Spec : Ensures(( ( result == 1 ) || ( result == 2 ) ))]"));
    assert!(i_main.contains("[Spec : Requires(( arg1 == 1 ))]\n  [Spec : Ensures(( result == 1 ))]\n  Int call_id_set_x_val_0(Int arg1);"));
    assert!(i_main
        .contains("[Spec : Ensures(( result == ( valueOf(fut_arg1) + valueOf(fut_arg2) ) ))]"));
    let i_id = text.split("interface I_id_set_x").nth(1).unwrap();
    assert!(i_id.starts_with(" {\n  [Spec : Requires(( val == 1 ))]\n  [Spec : Ensures(( result == 1 ))]\n  Int call(Int val);"));
    // Both function classes carry the global-object annotations.
    for c in ["C_main", "C_id_set_x"] {
        let cls = extract("order_contract.c");
        let specs = &cls.class(c).unwrap().specs;
        assert_eq!(specs.len(), 2, "{c}");
    }
}

#[test]
fn trivial_function() {
    let m = extract_src("int f(void){ return 0; }").unwrap();
    assert_eq!(method_names(&m, "C_f"), ["call"]);
    let mut text = String::new();
    for s in &m.class("C_f").unwrap().methods[0].body {
        abs_ir::print_stmt(s, 0, &mut text);
    }
    assert_eq!(
        text,
        "Bool returnFlag = False;\nInt funcResult = 0;\n{\n  funcResult = 0;\n  returnFlag = True;\n}\nreturn funcResult;\n"
    );
    assert!(m.main_block.is_empty());
}

#[test]
fn no_functions_no_annotations() {
    let m = extract_src("int x;").unwrap();
    assert_eq!(m.classes.len(), 1);
    assert!(m.classes[0].specs.is_empty());
    assert!(m.interfaces[0].methods.iter().all(|s| s.specs.is_empty()));
}

#[test]
fn invariant_violated_by_initial_value() {
    let e = extract_src("int x; //@ strong global invariant x == 1;\n").unwrap_err();
    assert!(
        matches!(e, ExtractError::Invariant { initial: 0, .. }),
        "{e}"
    );
}

#[test]
fn contract_mentioning_global_rejected() {
    let e =
        extract_src("int x;\n//@ ensures \\result == x;\nint f(void){ return 0; }").unwrap_err();
    assert!(matches!(e, ExtractError::ContractTranslation { .. }), "{e}");
}

#[test]
fn future_setter_precondition() {
    let src = "int x; //@ strong global invariant x == 0 || x == 1;\nint g(void){ return 1; }\nint f(void){ x = g(); return 0; }";
    let m = extract_src(src).unwrap();
    let sig = m
        .interface("I_f")
        .unwrap()
        .method("set_global_x_fut")
        .unwrap();
    assert_eq!(
        abs_ir::print_spec(&sig.specs[0]),
        "[Spec : Requires(( ( valueOf(fut_value) == 0 ) || ( valueOf(fut_value) == 1 ) ))]"
    );
    assert!(typecheck(&m).is_empty());
}

#[test]
fn comparison_helper_is_zero_one_valued() {
    let src = "int x;\nint f(void){ return x < 2; }";
    let m = extract_src(src).unwrap();
    let sig = m.interface("I_f").unwrap().method("op_lt_fut_val").unwrap();
    assert_eq!(
        abs_ir::print_spec(&sig.specs[0]),
        "[Spec : Ensures(( result == (if ( valueOf(fut_arg1) < arg2 ) then 1 else 0) ))]"
    );
}

#[test]
fn side_effects_in_arguments_are_awaited_by_the_call() {
    let src = "int x;\nint id(int a){ return a; }\nint f(void){ return id(x = 1); }";
    let m = extract_src(src).unwrap();
    let body = &m
        .class("C_f")
        .unwrap()
        .method("call_id_val_1")
        .unwrap()
        .body;
    let mut text = String::new();
    abs_ir::print_stmt(&body[0], 0, &mut text);
    assert_eq!(text, "await side_effect1?;\n");
    assert!(typecheck(&m).is_empty());
}

#[test]
fn non_const_local_becomes_field() {
    let src = "int f(int n){ int i = 0; while (i < n) { i = i + 1; } return i; }";
    let m = extract_src(src).unwrap();
    let c = m.class("C_f").unwrap();
    assert!(c.fields.iter().any(|f| f.name == "i"));
    assert!(c.method("get_local_i").is_some());
    assert!(c.method("set_local_i_fut").is_some());
    assert!(typecheck(&m).is_empty(), "{:?}", typecheck(&m));
}

#[test]
fn short_circuit_is_sequenced() {
    let src = "int x;\nint f(void){ if (x > 0 && x < 5) return 1; return 0; }";
    let m = extract_src(src).unwrap();
    assert!(typecheck(&m).is_empty(), "{:?}", typecheck(&m));
    let text = print_model(&m);
    // The right operand is only evaluated under the left one.
    assert!(text.contains("if ( ( tmp_"));
    assert!(text.contains("if ( !returnFlag ){"));
}

#[test]
fn compile_time_short_circuit_stays_inline() {
    let src = "int f(const int n){ return n > 0 && n < 5; }";
    let m = extract_src(src).unwrap();
    let text = print_model(&m);
    assert!(
        text.contains("funcResult = if ( ( n > 0 ) && ( n < 5 ) ) then 1 else 0;"),
        "{text}"
    );
}

#[test]
fn deterministic_output() {
    for f in ["fib.c", "order.c", "order_contract.c"] {
        assert_eq!(print_model(&extract(f)), print_model(&extract(f)));
    }
}

#[test]
fn extracted_text_round_trips() {
    for f in ["fib.c", "order.c", "order_contract.c"] {
        let m = extract(f);
        assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
    }
}

/// Every self-call targets an existing method of the class with matching
/// arity.
#[test]
fn helper_totality() {
    fn calls(body: &[Stmt], out: &mut Vec<(String, usize)>) {
        for s in body {
            match s {
                Stmt::VarDecl {
                    init:
                        Some(abs_ir::Rhs::AsyncCall {
                            callee: abs_ir::Expr::This,
                            method,
                            args,
                        }),
                    ..
                } => out.push((method.clone(), args.len())),
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    calls(then_branch, out);
                    calls(else_branch.as_deref().unwrap_or(&[]), out);
                }
                Stmt::While { body, .. } | Stmt::Block(body) => calls(body, out),
                _ => {}
            }
        }
    }
    for f in ["fib.c", "order.c", "order_contract.c"] {
        let m = extract(f);
        for c in &m.classes {
            let mut cs = Vec::new();
            for meth in &c.methods {
                calls(&meth.body, &mut cs);
            }
            for (name, arity) in cs {
                let target = c
                    .method(&name)
                    .unwrap_or_else(|| panic!("{}: {name}", c.name));
                assert_eq!(target.sig.params.len(), arity);
            }
        }
    }
}
