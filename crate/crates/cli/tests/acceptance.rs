//! One line per acceptance criterion, then a single assertion over all.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use uvc_core::abs_ir::{alpha_equivalent, normalize, parse_model, print_model, AbsModel};
use uvc_core::c_frontend::parse_translation_unit;
use uvc_core::extractor::extract_model;
use uvc_core::interpreter::{explore, Entry, ExploreOptions};
use uvc_core::prover::{apply_updates, Formula, Op, PoKind, Sort, Subst, Term, Update};
use uvc_core::smt::{encode_model, verify_model, FunctionEncoding, SolverConfig, Verdict};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn uvc(args: &[&str]) -> (Option<i32>, String, Duration) {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_uvc"))
        .args(args)
        .env_remove("UV_SOLVER")
        .env_remove("UV_TIMEOUT")
        .output()
        .unwrap();
    (
        o.status.code(),
        String::from_utf8(o.stdout).unwrap(),
        start.elapsed(),
    )
}

fn from_c(src: &str) -> AbsModel {
    normalize(&extract_model(&parse_translation_unit(src).unwrap().program).unwrap())
}

fn solver() -> SolverConfig {
    SolverConfig {
        jobs: 4,
        ..SolverConfig::default()
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fib(n: i64) -> i64 {
    if n <= 2 {
        1
    } else {
        fib(n - 1) + fib(n - 2)
    }
}

fn golden_extraction() -> Result<String, String> {
    let (code, out, t) = uvc(&["extract", data("fib.c").to_str().unwrap()]);
    ensure(code == Some(0), "extract failed")?;
    let got = parse_model(&out).map_err(|d| format!("emitted model does not parse: {d}"))?;
    let want = parse_model(&read("fib_model.abs")).unwrap();
    ensure(
        alpha_equivalent(&got, &want),
        "model differs from the reference",
    )?;
    for spec in [
        "[Spec : Ensures(( ( result >= 1 ) && ( result <= fib(n) ) ))]",
        "[Spec : Ensures(( ( result == ( valueOf(fut_arg1) - 1 ) ) || ( result == valueOf(fut_arg1) ) ))]",
        "[Spec : ObjInv(( ( this.x == 0 ) || ( this.x == 1 ) ))]",
    ] {
        ensure(out.contains(spec), format!("missing {spec}"))?;
    }
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!(
        "alpha-equivalent to reference, {} ms",
        t.as_millis()
    ))
}

fn verify_all(
    file: &str,
    budget: Duration,
    must_include: &[(&str, &str)],
) -> Result<String, String> {
    let src = read(file);
    let model = if file.ends_with(".abs") {
        normalize(&parse_model(&src).unwrap())
    } else {
        from_c(&src)
    };
    let start = Instant::now();
    let reports = verify_model(&model, &solver()).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Valid)
        .map(|r| r.line())
        .collect();
    ensure(bad.is_empty(), bad.join("; "))?;
    for (c, m) in must_include {
        ensure(
            reports.iter().any(|r| r.class == *c && r.method == *m),
            format!("no obligation for {c}.{m}"),
        )?;
    }
    let inits = reports
        .iter()
        .filter(|r| r.kind == PoKind::ClassInitialization)
        .count();
    // The command-line path must agree.
    let (code, _, _) = uvc(&["verify", "--jobs", "4", data(file).to_str().unwrap()]);
    ensure(
        code == Some(0),
        format!("`uvc verify {file}` exited with {code:?}"),
    )?;
    ensure(t < budget, format!("took {t:?}"))?;
    Ok(format!(
        "{} obligations valid ({} class initializations), {} ms",
        reports.len(),
        inits,
        t.as_millis()
    ))
}

const UNRESOLVED_METHODS: [&str; 9] = [
    "C_one_to_fib.call_pred_or_id_fut_0",
    "C_one_or_two.op_plus_fut_fut",
    "C_pred_or_id.op_minus_val_fut",
    "C_pred_or_id.op_plus_fut_fut",
    "C_one_to_fib.op_plus_fut_fut",
    "C_id_set_x.call",
    "C_one_or_two.call",
    "C_pred_or_id.call",
    "C_one_to_fib.call",
];

fn deadlock_list() -> Result<String, String> {
    let (_, out, _) = uvc(&["deadlock", "--json", data("fib.c").to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = v["deadlock"]["unresolved_methods"]
        .as_object()
        .ok_or("no deadlock report")?
        .keys()
        .cloned()
        .collect();
    let want: BTreeSet<String> = UNRESOLVED_METHODS.iter().map(|s| s.to_string()).collect();
    ensure(
        got == want,
        format!(
            "extra {:?}, missing {:?}",
            got.difference(&want).collect::<Vec<_>>(),
            want.difference(&got).collect::<Vec<_>>()
        ),
    )?;
    Ok("exactly the 9 expected methods".into())
}

fn exploration() -> Result<String, String> {
    let opts = ExploreOptions::default();
    let order = from_c(&read("order.c"));
    let e: Entry = "C_main.call()".parse().unwrap();
    let r = explore(&order, &e, &opts).map_err(|e| e.to_string())?;
    ensure(
        r.exhausted && r.result_ints() == BTreeSet::from([1, 2]),
        format!("main: {:?}", r.results),
    )?;
    let m = from_c(&read("fib.c"));
    let mut detail = Vec::new();
    for n in 1..=5 {
        let e: Entry = format!("C_one_to_fib.call({n})").parse().unwrap();
        let start = Instant::now();
        let r = explore(&m, &e, &opts).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let want: BTreeSet<i64> = (1..=fib(n)).collect();
        ensure(r.exhausted, format!("n={n} not exhausted"))?;
        ensure(r.result_ints() == want, format!("n={n}: {:?}", r.results))?;
        ensure(t < Duration::from_secs(300), format!("n={n} took {t:?}"))?;
        detail.push(format!("n={n}: {} configs", r.configurations));
    }
    Ok(format!("main {{1, 2}}; {}", detail.join(", ")))
}

struct Mutant {
    file: &'static str,
    from: &'static str,
    to: &'static str,
    entries: &'static [&'static str],
}

const MUTANTS: &[Mutant] = &[
    Mutant {
        file: "fib.c",
        from: "ensures \\result == val;",
        to: "ensures \\result == val && val == 0;",
        entries: &[
            "C_one_to_fib.call(1)",
            "C_one_to_fib.call(2)",
            "C_one_to_fib.call(3)",
            "C_one_to_fib.call(4)",
        ],
    },
    Mutant {
        file: "fib.c",
        from: "ensures \\result == 1 || \\result == 2;",
        to: "ensures \\result == 2;",
        entries: &[
            "C_one_to_fib.call(1)",
            "C_one_to_fib.call(2)",
            "C_one_to_fib.call(3)",
            "C_one_to_fib.call(4)",
        ],
    },
    Mutant {
        file: "fib.c",
        from: "ensures \\result == val - 1 || \\result == val;",
        to: "ensures \\result == val;",
        entries: &[
            "C_one_to_fib.call(1)",
            "C_one_to_fib.call(2)",
            "C_one_to_fib.call(3)",
            "C_one_to_fib.call(4)",
        ],
    },
    Mutant {
        file: "fib.c",
        from: "ensures \\result >= 1 && \\result <= fib(n);",
        to: "ensures \\result == 1;",
        entries: &[
            "C_one_to_fib.call(1)",
            "C_one_to_fib.call(2)",
            "C_one_to_fib.call(3)",
            "C_one_to_fib.call(4)",
        ],
    },
    Mutant {
        file: "order_contract.c",
        from: "ensures \\result == 1; @*/",
        to: "ensures \\result == 1 && val == 0; @*/",
        entries: &["C_main.call()"],
    },
    Mutant {
        file: "order_contract.c",
        from: "ensures \\result == 1 || \\result == 2;",
        to: "ensures \\result == 2;",
        entries: &["C_main.call()"],
    },
];

fn mutations() -> Result<String, String> {
    let opts = ExploreOptions {
        monitor: true,
        ..ExploreOptions::default()
    };
    for mu in MUTANTS {
        let src = read(mu.file);
        ensure(
            src.contains(mu.from),
            format!("{}: `{}` not found", mu.file, mu.from),
        )?;
        let m = from_c(&src.replacen(mu.from, mu.to, 1));
        let reports = verify_model(&m, &solver()).map_err(|e| e.to_string())?;
        ensure(
            reports.iter().any(|r| r.verdict == Verdict::NotValid),
            format!("{}: `{}` still verifies", mu.file, mu.to),
        )?;
        let flagged = mu.entries.iter().any(|e| {
            let e: Entry = e.parse().unwrap();
            !explore(&m, &e, &opts).unwrap().violations.is_empty()
        });
        ensure(
            flagged,
            format!("{}: monitor found no violation of `{}`", mu.file, mu.to),
        )?;
    }
    Ok(format!(
        "{} mutants: NotValid and monitored violation each",
        MUTANTS.len()
    ))
}

fn corpus() -> Vec<(&'static str, AbsModel, Vec<&'static str>)> {
    let c = |f: &str| extract_model(&parse_translation_unit(&read(f)).unwrap().program).unwrap();
    vec![
        ("order.c", c("order.c"), vec!["C_main.call()"]),
        (
            "order_contract.c",
            c("order_contract.c"),
            vec!["C_main.call()"],
        ),
        (
            "fib.c",
            c("fib.c"),
            vec![
                "C_one_to_fib.call(1)",
                "C_one_to_fib.call(2)",
                "C_one_to_fib.call(3)",
                "C_one_to_fib.call(4)",
            ],
        ),
        (
            "fold.abs",
            parse_model(&read("fold.abs")).unwrap(),
            vec!["FoldC.fold(1, 2, 5)"],
        ),
        (
            "fib_model.abs",
            parse_model(&read("fib_model.abs")).unwrap(),
            vec!["C_one_to_fib.call(4)"],
        ),
    ]
}

fn update_laws() -> Result<(), String> {
    let v = |n: &str| Term::pvar(n, Sort::Int);
    let f = Formula::update(
        Update::assign("v", v("w")),
        Formula::eq(v("v"), Term::Int(1)),
    );
    ensure(
        apply_updates(&f) == Formula::eq(v("w"), Term::Int(1)),
        "substitution law",
    )?;
    let stored = Term::Store(Box::new(Term::heap()), "x".into(), Box::new(Term::Int(0)));
    let t = Term::Upd(
        Box::new(Update::assign("heap", stored)),
        Box::new(Term::select(Term::heap(), "x", Sort::Int)),
    );
    ensure(
        t.subst(&Subst::new()) == Term::Int(0),
        "select-over-store law",
    )?;
    let u = Update::par(
        Update::assign("v", Term::Int(1)),
        Update::assign("v", Term::Int(2)),
    );
    let t = Term::Upd(Box::new(u), Box::new(v("v")));
    ensure(t.subst(&Subst::new()) == Term::Int(2), "right-override law")?;
    let u = Update::seq(
        Update::assign("v", Term::Int(1)),
        Update::assign("w", Term::bin(Op::Add, v("v"), Term::Int(1))),
    );
    let t = Term::Upd(Box::new(u), Box::new(v("w")));
    ensure(
        t.subst(&Subst::new()) == Term::Int(2),
        "sequential composition law",
    )
}

fn properties() -> Result<String, String> {
    let opts = ExploreOptions::default();
    let monitored = ExploreOptions {
        monitor: true,
        ..ExploreOptions::default()
    };
    let mut explored = 0;
    for (name, raw, entries) in corpus() {
        let norm = normalize(&raw);
        ensure(
            normalize(&norm) == norm,
            format!("{name}: normalization not idempotent"),
        )?;
        for m in [&raw, &norm] {
            let text = print_model(m);
            let back = parse_model(&text).map_err(|d| format!("{name}: {d}"))?;
            ensure(
                print_model(&back) == text,
                format!("{name}: print/parse round trip"),
            )?;
        }
        let all_valid = verify_model(&norm, &solver())
            .map_err(|e| e.to_string())?
            .iter()
            .all(|r| r.verdict == Verdict::Valid);
        for e in entries {
            let e: Entry = e.parse().unwrap();
            let a = explore(&raw, &e, &opts).map_err(|x| x.to_string())?;
            let b = explore(&norm, &e, &monitored).map_err(|x| x.to_string())?;
            ensure(
                a.results == b.results,
                format!("{name} {e}: normalization changed results"),
            )?;
            if let (true, Some(v)) = (all_valid, b.violations.first()) {
                return Err(format!(
                    "{name} {e}: verified contract violated: {}",
                    v.violation
                ));
            }
            explored += 1;
        }
    }
    update_laws()?;
    Ok(format!(
        "{explored} explorations agree; round trips, idempotence, update laws hold"
    ))
}

fn determinism() -> Result<String, String> {
    let a = uvc(&["extract", data("fib.c").to_str().unwrap()]).1;
    let b = uvc(&["extract", data("fib.c").to_str().unwrap()]).1;
    ensure(a == b, "extracted model text differs")?;
    let mut scripts = Vec::new();
    for _ in 0..2 {
        let m = from_c(&read("fib.c"));
        let enc = encode_model(&m, FunctionEncoding::Recursive).map_err(|e| e.to_string())?;
        scripts.push(enc.into_iter().flat_map(|p| p.scripts).collect::<Vec<_>>());
    }
    ensure(scripts[0] == scripts[1], "SMT scripts differ")?;
    Ok(format!(
        "model text and {} SMT scripts identical",
        scripts[0].len()
    ))
}

/// Bypasses libtest output capture so the lines show up in every run.
fn line(s: String) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{s}");
}

type Check = Box<dyn Fn() -> Result<String, String>>;

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Check)> = vec![
        ("golden extraction", Box::new(golden_extraction)),
        (
            "recursive program verifies",
            Box::new(|| {
                verify_all(
                    "fib.c",
                    Duration::from_secs(60),
                    &[("C_one_to_fib", "call"), ("Global", "<init>")],
                )
            }),
        ),
        (
            "evaluation-order contract verifies",
            Box::new(|| {
                verify_all(
                    "order_contract.c",
                    Duration::from_secs(10),
                    &[("C_main", "call")],
                )
            }),
        ),
        (
            "hand-written fold model verifies",
            Box::new(|| verify_all("fold.abs", Duration::from_secs(10), &[("FoldC", "fold")])),
        ),
        ("deadlock list", Box::new(deadlock_list)),
        ("exhaustive exploration", Box::new(exploration)),
        ("mutants rejected", Box::new(mutations)),
        ("property suites", Box::new(properties)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => line(format!("criterion {}: PASS {name}: {detail}", k + 1)),
            Err(why) => {
                line(format!("criterion {}: FAIL {name}: {why}", k + 1));
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
