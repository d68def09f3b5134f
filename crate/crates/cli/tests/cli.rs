use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn uvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uvc"))
        .args(args)
        .env_remove("UV_SOLVER")
        .env_remove("UV_TIMEOUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(name: &str) -> String {
    data(name).display().to_string()
}

/// Report lines without the timing suffix.
fn verdict_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| match l.rfind(", ") {
            Some(k) if l.ends_with(" ms)") => format!("{})", &l[..k]),
            _ => l.to_string(),
        })
        .collect()
}

#[test]
fn verify_programs_and_models() {
    for f in ["fib.c", "order_contract.c", "fold.abs"] {
        let o = uvc(&["verify", "--jobs", "4", &path(f)]);
        assert_eq!(o.status.code(), Some(0), "{f}\n{}", stdout(&o));
        assert!(!stdout(&o).contains("NOT_VALID"));
    }
}

#[test]
fn deadlock_lists_unresolved_methods() {
    let o = uvc(&["deadlock", &path("fib.c")]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(
        text.lines().filter(|l| l.contains(": unresolved")).count(),
        9,
        "{text}"
    );
    assert!(text.ends_with("11 structurally deadlock-free, 9 unresolved\n"));
    let o = uvc(&["deadlock", &path("fold.abs")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn explore_reports_result_set() {
    let o = uvc(&["explore", &path("order.c"), "--entry", "C_main.call()"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("results: {1, 2}\n"));
    assert!(stdout(&o).contains("exhausted: true\n"));

    let o = uvc(&[
        "explore",
        "--json",
        &path("fib.c"),
        "--entry",
        "C_one_to_fib.call(4)",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exploration"]["results"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["exploration"]["exhausted"], true);
    assert_eq!(v["exit_code"], 0);

    let o = uvc(&[
        "explore",
        &path("fib.c"),
        "--entry",
        "C_one_to_fib.call(4)",
        "--max-depth",
        "2",
    ]);
    assert!(stdout(&o).contains("exhausted: false"));
}

#[test]
fn explore_flags_mutated_contract() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(data("order_contract.c"))
        .unwrap()
        .replace(
            "ensures \\result == 1 || \\result == 2;",
            "ensures \\result == 2;",
        );
    let file = dir.path().join("mutant.c");
    std::fs::write(&file, src).unwrap();
    let traces = dir.path().join("traces");
    let o = uvc(&[
        "explore",
        file.to_str().unwrap(),
        "--entry",
        "C_main.call()",
        "--emit-traces",
        traces.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation: "));
    let files = std::fs::read_dir(&traces).unwrap().count();
    assert!(files >= 1);
    let t = std::fs::read_to_string(traces.join("trace1.txt")).unwrap();
    assert!(t.starts_with("0: invEv(env, "), "{t}");
}

#[test]
fn json_report_is_one_document() {
    let o = uvc(&["all", "--json", &path("fold.abs")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let stages: Vec<&str> = v["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["parse", "normalize", "verify", "deadlock"]);
    assert_eq!(v["obligations"].as_array().unwrap().len(), 4);
    assert_eq!(v["obligations"][0]["verdict"], "Valid");
    assert!(v["deadlock"]["unresolved_methods"]
        .as_object()
        .unwrap()
        .is_empty());
}

#[test]
fn extract_then_verify_matches_direct_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = uvc(&["extract", &path("fib.c")]);
    assert_eq!(o.status.code(), Some(0));
    let model = dir.path().join("fib.abs");
    std::fs::write(&model, &o.stdout).unwrap();
    let direct = uvc(&["verify", "--jobs", "4", &path("fib.c")]);
    let staged = uvc(&["verify", "--jobs", "4", model.to_str().unwrap()]);
    assert_eq!(direct.status.code(), staged.status.code());
    assert_eq!(
        verdict_lines(&stdout(&direct)),
        verdict_lines(&stdout(&staged))
    );
}

#[test]
fn output_is_deterministic() {
    let a = uvc(&["extract", &path("fib.c")]);
    let b = uvc(&["extract", &path("fib.c")]);
    assert_eq!(a.stdout, b.stdout);

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let o = uvc(&[
            "verify",
            "--dump-smt",
            d.path().to_str().unwrap(),
            &path("fold.abs"),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(d1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let x = std::fs::read(d1.path().join(&n)).unwrap();
        let y = std::fs::read(d2.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.c");
    std::fs::write(&bad, "int f(int *p) { return *p; }").unwrap();
    assert_eq!(
        uvc(&["verify", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(uvc(&["verify", "/nonexistent/x.c"]).status.code(), Some(2));
    assert_eq!(
        uvc(&[
            "verify",
            "--solver",
            "/nonexistent/solver",
            &path("fold.abs")
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        uvc(&["explore", &path("fib.c"), "--entry", "nonsense"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        uvc(&["explore", &path("fib.c"), "--entry", "X.call()"])
            .status
            .code(),
        Some(2)
    );

    let mutant = dir.path().join("mutant.c");
    let src = std::fs::read_to_string(data("order_contract.c"))
        .unwrap()
        .replace(
            "ensures \\result == 1 || \\result == 2;",
            "ensures \\result == 2;",
        );
    std::fs::write(&mutant, src).unwrap();
    assert_eq!(
        uvc(&["verify", mutant.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn flags_override_environment() {
    let file = path("fold.abs");
    let run = |env: &[(&str, &str)], args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_uvc"));
        c.arg("verify").args(args).arg(&file);
        for (k, v) in env {
            c.env(k, v);
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(run(&[("UV_SOLVER", "/nonexistent/solver")], &[]), Some(3));
    assert_eq!(
        run(&[("UV_SOLVER", "/nonexistent/solver")], &["--solver", "z3"]),
        Some(0)
    );
    assert_eq!(run(&[("UV_TIMEOUT", "0.000001")], &[]), Some(1));
    assert_eq!(
        run(&[("UV_TIMEOUT", "0.000001")], &["--timeout", "30"]),
        Some(0)
    );
    assert_eq!(run(&[], &["--timeout", "-1"]), Some(2));
}
