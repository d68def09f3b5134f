use std::collections::BTreeSet;

use proptest::prelude::*;
use uvc_core::abs_ir::{normalize, parse_model, AbsModel};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::deadlock::analyze;
use uvc_core::extractor::extract_model;

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn from_c(src: &str) -> AbsModel {
    normalize(&extract_model(&parse_translation_unit(src).unwrap().program).unwrap())
}

fn from_abs(src: &str) -> AbsModel {
    normalize(&parse_model(src).unwrap())
}

#[test]
fn fib_unresolved_methods() {
    let r = analyze(&from_c(&data("fib.c")));
    let expected: BTreeSet<String> = [
        "C_one_to_fib.call_pred_or_id_fut_0",
        "C_one_or_two.op_plus_fut_fut",
        "C_pred_or_id.op_minus_val_fut",
        "C_pred_or_id.op_plus_fut_fut",
        "C_one_to_fib.op_plus_fut_fut",
        "C_id_set_x.call",
        "C_one_or_two.call",
        "C_pred_or_id.call",
        "C_one_to_fib.call",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let got: BTreeSet<String> = r.unresolved_methods.keys().cloned().collect();
    assert_eq!(got, expected, "{r}");
    for m in [
        "Global.get_x",
        "Global.set_x",
        "C_id_set_x.set_global_x_val",
        "C_one_or_two.get_global_x",
        "C_one_to_fib.call_one_to_fib_val_0",
        "C_one_to_fib.call_one_or_two_0",
    ] {
        assert!(r.free_methods.contains(m), "{m} not free: {r}");
    }
    assert_eq!(
        r.unresolved_methods["C_one_or_two.op_plus_fut_fut"],
        "takes future parameter"
    );
}

#[test]
fn fold_is_free() {
    let r = analyze(&from_abs(&data("fold.abs")));
    assert!(r.all_free(), "{r}");
    assert!(r.free_methods.contains("CompC.op"));
    assert!(r.free_methods.contains("FoldC.fold"));
}

#[test]
fn get_on_own_call_is_unresolved() {
    let src = "module M;
interface I { Int m(); Int n(); }
class C implements I {
  Int m() { return 1; }
  Int n() { Fut<Int> f = this!m(); Int r = f.get; return r; }
}";
    let r = analyze(&from_abs(src));
    assert!(r.free_methods.contains("C.m"));
    assert!(r.unresolved_methods["C.n"].contains("call to this object"));
}

#[test]
fn unresolved_status_propagates() {
    let src = "module M;
interface I { Int m(Fut<Int> f); Int k(I o); }
class C implements I {
  Int m(Fut<Int> f) { await f?; return 1; }
  Int k(I o) { Fut<Int> g = o!m(g); Int r = g.get; return r; }
}";
    let r = analyze(&from_abs(src));
    assert_eq!(r.unresolved_methods["C.m"], "takes future parameter");
    assert!(r.unresolved_methods["C.k"].contains("C.m"), "{r}");
}

fn trivial(methods: usize) -> String {
    let sigs: String = (0..methods).map(|k| format!("Int m{k}(); ")).collect();
    let bodies: String = (0..methods)
        .map(|k| format!("Int m{k}() {{ return 0; }}\n"))
        .collect();
    format!("module M;\ninterface I {{ {sigs}}}\nclass C implements I {{\n{bodies}}}")
}

proptest! {
    #[test]
    fn trivial_methods_are_free(n in 1usize..8) {
        let r = analyze(&from_abs(&trivial(n)));
        prop_assert!(r.all_free());
        prop_assert_eq!(r.free_methods.len(), n);
    }

    #[test]
    fn adding_sync_free_class_is_monotone(n in 1usize..5) {
        let base = from_c(&data("fib.c"));
        let before = analyze(&base).free_methods;
        let mut extended = base.clone();
        let extra = from_abs(&trivial(n).replace("interface I", "interface Extra").replace("class C implements I", "class ExtraC implements Extra"));
        extended.interfaces.extend(extra.interfaces);
        extended.classes.extend(extra.classes);
        let after = analyze(&extended).free_methods;
        prop_assert!(before.is_subset(&after));
        prop_assert_eq!(after.len(), before.len() + n);
    }
}
