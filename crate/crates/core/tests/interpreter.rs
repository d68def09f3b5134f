use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use uvc_core::abs_ir::{normalize, parse_model, AbsModel};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::extractor::extract_model;
use uvc_core::interpreter::{
    explore, monitor, run_random, Choice, Entry, Event, ExploreOptions, Interpreter, Trace, Value,
    ViolationKind,
};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn from_c(src: &str) -> AbsModel {
    normalize(&extract_model(&parse_translation_unit(src).unwrap().program).unwrap())
}

fn entry(s: &str) -> Entry {
    s.parse().unwrap()
}

fn results(m: &AbsModel, e: &str) -> BTreeSet<i64> {
    let r = explore(m, &entry(e), &ExploreOptions::default()).unwrap();
    assert!(r.exhausted, "{e} not exhausted");
    r.result_ints()
}

fn fib(n: i64) -> i64 {
    if n <= 2 {
        1
    } else {
        fib(n - 1) + fib(n - 2)
    }
}

#[test]
fn entry_syntax() {
    let e = entry("C_one_to_fib.call(3)");
    assert_eq!(e.class, "C_one_to_fib");
    assert_eq!(e.method, "call");
    assert_eq!(e.args, vec![Value::Int(3)]);
    assert_eq!(
        entry(" C.m( -1 , True ) ").args,
        vec![Value::Int(-1), Value::Bool(true)]
    );
    assert_eq!(e.to_string(), "C_one_to_fib.call(3)");
    for bad in ["C.m", "Cm()", "C.m(x)", ".m()"] {
        assert!(bad.parse::<Entry>().is_err(), "{bad}");
    }
}

#[test]
fn order_result_set() {
    assert_eq!(
        results(&from_c(&data("order.c")), "C_main.call()"),
        BTreeSet::from([1, 2])
    );
}

#[test]
fn one_to_fib_result_sets() {
    let m = from_c(&data("fib.c"));
    for n in 1..=5 {
        let expected: BTreeSet<i64> = (1..=fib(n)).collect();
        assert_eq!(
            results(&m, &format!("C_one_to_fib.call({n})")),
            expected,
            "n = {n}"
        );
    }
}

#[test]
fn unknown_entry_is_rejected() {
    let m = from_c(&data("fib.c"));
    assert!(explore(&m, &entry("Nope.call()"), &ExploreOptions::default()).is_err());
    assert!(explore(
        &m,
        &entry("C_one_to_fib.nope()"),
        &ExploreOptions::default()
    )
    .is_err());
    assert!(explore(
        &m,
        &entry("C_one_to_fib.call()"),
        &ExploreOptions::default()
    )
    .is_err());
}

#[test]
fn scheduling_choices_of_order() {
    let m = from_c(&data("order.c"));
    let it = Interpreter::new(&m);
    let (mut cfg, _, _) = it
        .machine()
        .initial(&entry("C_main.call()"), false)
        .unwrap();
    // Single runnable process at the start.
    assert_eq!(it.machine().choices(&cfg).len(), 1);
    // Follow the forced steps until the scheduler has a real choice.
    let mut steps = 0;
    loop {
        let succ = it.step_choices(&cfg);
        if succ.len() != 1 {
            assert_eq!(succ.len(), 2);
            let main_obj = cfg
                .objects
                .iter()
                .position(|o| it.machine().prog.classes[o.class].name.as_ref() == "C_main")
                .unwrap();
            for (c, _, _) in &succ {
                assert!(matches!(c, Choice::Pool(o, _) if *o == main_obj));
            }
            break;
        }
        cfg = succ.into_iter().next().unwrap().1;
        steps += 1;
        assert!(steps < 20);
    }
}

const SQUARE: &str = "module M;
interface E { Int one(); Int sq(Fut<Int> x); }
interface D { Int run(); }
class EC implements E {
  Int f = 0;
  Int one() { return 1; }
  Int sq(Fut<Int> x) { await x?; this.f = this.f * this.f; return this.f; }
}
class DC(E e) implements D {
  Int run() {
    Fut<Int> x = e!one();
    await x?;
    Fut<Int> r = e!sq(x);
    await r?;
    Int v = r.get;
    return v;
  }
}";

#[test]
fn resumed_await_then_return() {
    let m = normalize(&parse_model(SQUARE).unwrap());
    let opts = ExploreOptions {
        max_traces: 10,
        ..ExploreOptions::default()
    };
    let r = explore(&m, &entry("DC.run()"), &opts).unwrap();
    assert_eq!(r.result_ints(), BTreeSet::from([0]));
    let it = Interpreter::new(&m);
    let run = it.run_random(&entry("DC.run()"), 7, 1000).unwrap();
    let evs: Vec<&Event> = run.trace.events().collect();
    // The segment of `sq` starts at its satisfied await and returns f * f.
    let k = evs
        .iter()
        .position(|e| matches!(e, Event::InvR { method, .. } if method.as_ref() == "sq"))
        .unwrap();
    assert!(
        matches!(
            evs[k + 1],
            Event::Fut {
                value: Value::Int(0),
                ..
            }
        ),
        "{}",
        run.trace
    );
}

#[test]
fn random_runs() {
    let order = from_c(&data("order.c"));
    let mut seen = BTreeSet::new();
    for seed in 0..40 {
        let r = run_random(&order, &entry("C_main.call()"), seed, 10_000).unwrap();
        assert!(r.finished);
        let Some(Value::Int(v)) = r.result else {
            panic!()
        };
        assert!(v == 1 || v == 2);
        seen.insert(v);
        let again = run_random(&order, &entry("C_main.call()"), seed, 10_000).unwrap();
        assert_eq!(again.result, r.result);
        assert_eq!(again.trace, r.trace);
    }
    assert_eq!(seen, BTreeSet::from([1, 2]));

    let fib = from_c(&data("fib.c"));
    for seed in 0..10 {
        let r = run_random(&fib, &entry("C_one_to_fib.call(3)"), seed, 10_000).unwrap();
        assert!(matches!(r.result, Some(Value::Int(1 | 2))));
    }

    // No scheduling freedom: same result for every seed.
    let single = normalize(&parse_model("module M; interface I { Int m(); } class C implements I { Int m() { return 41 + 1; } }").unwrap());
    for seed in 0..5 {
        let r = run_random(&single, &entry("C.m()"), seed, 100).unwrap();
        assert_eq!(r.result, Some(Value::Int(42)));
    }
}

/// Every futREv reads the value of an earlier futEv of the same future.
fn check_future_events(t: &Trace) {
    let mut resolved: BTreeMap<usize, Value> = BTreeMap::new();
    for e in t.events() {
        match e {
            Event::Fut { fut, value, .. } => {
                assert!(
                    resolved.insert(*fut, *value).is_none(),
                    "future resolved twice"
                );
            }
            Event::FutR { fut, value, .. } => {
                assert_eq!(resolved.get(fut), Some(value), "futREv before futEv\n{t}");
            }
            _ => {}
        }
    }
}

/// Between the start or resumption of a process and its next release, no
/// other process of the same object runs.
fn check_exclusive(t: &Trace) {
    let mut running: BTreeMap<usize, usize> = BTreeMap::new();
    for e in t.events() {
        match e {
            Event::InvR { obj, fut, .. } | Event::SuspR { obj, fut, .. } => {
                if let Some(other) = running.insert(*obj, *fut) {
                    // Only a process blocked in a get may hold the object; it
                    // cannot have been replaced.
                    panic!("o{obj}: f{fut} started while f{other} holds the object\n{t}");
                }
            }
            Event::Susp { obj, fut, .. } | Event::Fut { obj, fut, .. } => {
                assert_eq!(running.remove(obj), Some(*fut), "{t}");
            }
            _ => {}
        }
    }
}

#[test]
fn trace_properties() {
    let m = from_c(&data("fib.c"));
    let opts = ExploreOptions {
        max_traces: 200,
        ..ExploreOptions::default()
    };
    let r = explore(&m, &entry("C_one_to_fib.call(4)"), &opts).unwrap();
    assert!(!r.traces.is_empty());
    assert_eq!(r.deadlocks, 0);
    for t in &r.traces {
        check_future_events(t);
        check_exclusive(t);
    }
    for seed in 0..20 {
        let t = run_random(&m, &entry("C_one_to_fib.call(5)"), seed, 100_000)
            .unwrap()
            .trace;
        check_future_events(&t);
        check_exclusive(&t);
    }
}

#[test]
fn verified_model_has_no_violations() {
    let m = from_c(&data("fib.c"));
    let opts = ExploreOptions {
        monitor: true,
        ..ExploreOptions::default()
    };
    for n in 1..=4 {
        let r = explore(&m, &entry(&format!("C_one_to_fib.call({n})")), &opts).unwrap();
        assert!(r.violations.is_empty(), "{}", r.violations[0].violation);
    }
    let r = explore(
        &from_c(&data("order_contract.c")),
        &entry("C_main.call()"),
        &opts,
    )
    .unwrap();
    assert!(r.violations.is_empty());
}

#[test]
fn empty_trace_has_no_violations() {
    assert!(monitor(&Trace::default(), &from_c(&data("fib.c"))).is_empty());
}

#[test]
fn monitor_flags_mutated_postcondition() {
    let src = data("order_contract.c").replace(
        "ensures \\result == 1 || \\result == 2;",
        "ensures \\result == 2;",
    );
    let m = from_c(&src);
    let opts = ExploreOptions {
        monitor: true,
        ..ExploreOptions::default()
    };
    let r = explore(&m, &entry("C_main.call()"), &opts).unwrap();
    assert_eq!(r.result_ints(), BTreeSet::from([1, 2]));
    let v = r
        .violations
        .iter()
        .find(|v| v.violation.kind == ViolationKind::Postcondition && v.violation.method == "call")
        .expect("violation");
    assert!(v.violation.event.starts_with("futEv"));
    assert!(v.violation.event.ends_with(", 1)"), "{}", v.violation.event);
    // The witness trace reproduces the violation when monitored on its own.
    assert!(!monitor(&v.trace, &m).is_empty());
}

#[test]
fn monitor_flags_violated_precondition() {
    let src = "module M;
interface I { [Spec : Requires(x > 0)] Int m(Int x); Int go(); }
class C implements I {
  Int m(Int x) { return x; }
  Int go() { Fut<Int> f = this!m(0); await f?; Int r = f.get; return r; }
}";
    let m = normalize(&parse_model(src).unwrap());
    let opts = ExploreOptions {
        monitor: true,
        ..ExploreOptions::default()
    };
    let r = explore(&m, &entry("C.go()"), &opts).unwrap();
    assert!(r
        .violations
        .iter()
        .any(|v| v.violation.kind == ViolationKind::Precondition
            && v.violation.annotation == "( x > 0 )"));
}

#[test]
fn stuck_and_deadlocked_processes() {
    let src = "module M;
interface I { Int div(Int a); Int self_get(); }
class C implements I {
  Int div(Int a) { return 10 / a; }
  Int self_get() { Fut<Int> f = this!div(1); Int r = f.get; return r; }
}";
    let m = normalize(&parse_model(src).unwrap());
    let r = explore(&m, &entry("C.div(0)"), &ExploreOptions::default()).unwrap();
    assert!(r.results.is_empty());
    assert!(r.stuck.contains("division by zero"));
    let r = explore(&m, &entry("C.self_get()"), &ExploreOptions::default()).unwrap();
    assert!(r.results.is_empty());
    assert_eq!(r.deadlocks, 1);
}

#[test]
fn depth_bound_is_reported() {
    let m = from_c(&data("fib.c"));
    let opts = ExploreOptions {
        max_depth: 3,
        ..ExploreOptions::default()
    };
    let r = explore(&m, &entry("C_one_to_fib.call(4)"), &opts).unwrap();
    assert!(!r.exhausted);
}

#[test]
fn loops_and_fields() {
    let src = "module M;
interface I { Int sum(Int n); }
class C(Int acc) implements I {
  Int sum(Int n) {
    Int i = 0;
    while (i < n) { i = i + 1; acc = acc + i; }
    return acc;
  }
}";
    let m = normalize(&parse_model(src).unwrap());
    assert_eq!(results(&m, "C.sum(10)"), BTreeSet::from([55]));
}

fn corpus() -> Vec<(AbsModel, AbsModel, Vec<String>)> {
    let raw = |s: &str| parse_model(s).unwrap();
    let c = |s: &str| extract_model(&parse_translation_unit(s).unwrap().program).unwrap();
    let sync = "module M;
interface I { Int inc(Int x); Int twice(Int x); }
interface J { Int go(Int x); }
class C implements I {
  Int inc(Int x) { return x + 1; }
  Int twice(Int x) { return x * 2; }
}
class D(I c) implements J {
  Int go(Int x) { Int a = c.inc(x); c!twice(a); return c.twice(a); }
}";
    vec![
        (c(&data("order.c")), vec!["C_main.call()".to_string()]),
        (
            c(&data("order_contract.c")),
            vec!["C_main.call()".to_string()],
        ),
        (
            c(&data("fib.c")),
            (1..=4).map(|n| format!("C_one_to_fib.call({n})")).collect(),
        ),
        (
            raw(&data("fold.abs")),
            vec!["FoldC.fold(1, 2, 5)".to_string()],
        ),
        (raw(sync), vec!["D.go(3)".to_string()]),
        (raw(SQUARE), vec!["DC.run()".to_string()]),
    ]
    .into_iter()
    .map(|(m, es)| {
        let n = normalize(&m);
        (m, n, es)
    })
    .collect()
}

#[test]
fn normalization_preserves_result_sets() {
    for (raw, norm, entries) in corpus() {
        for e in entries {
            let a = explore(&raw, &entry(&e), &ExploreOptions::default()).unwrap();
            let b = explore(&norm, &entry(&e), &ExploreOptions::default()).unwrap();
            assert!(a.exhausted && b.exhausted);
            assert_eq!(a.results, b.results, "{e}");
            assert!(!a.results.is_empty(), "{e}");
            let c = explore(&normalize(&norm), &entry(&e), &ExploreOptions::default()).unwrap();
            assert_eq!(b.results, c.results);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_result_is_explored(seed in any::<u64>(), n in 1i64..=4) {
        let m = from_c(&data("fib.c"));
        let e = entry(&format!("C_one_to_fib.call({n})"));
        let all = explore(&m, &e, &ExploreOptions::default()).unwrap().results;
        let one = run_random(&m, &e, seed, 100_000).unwrap();
        prop_assert!(one.finished);
        prop_assert!(all.contains(&one.result.unwrap()));
    }
}
