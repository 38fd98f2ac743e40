use std::path::PathBuf;
use std::process::Command;

use hocrwl::parser::{
    parse_context, parse_expr_with, parse_extension, parse_programs, ExprOptions, PRELUDE,
};
use hocrwl::syntax::ProgramFlags;
use serde_json::Value;

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs")
}

fn hocrwl(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hocrwl"))
        .args(args)
        .env_remove("HOCRWL_PRELUDE")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn ex1(args: &[&str]) -> (i32, String) {
    let path = programs().join("ex1.crwl");
    let mut all = vec!["-p", path.to_str().unwrap(), "--prelude"];
    all.extend_from_slice(args);
    hocrwl(&all)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

#[test]
fn denote_examples() {
    let (code, out) = ex1(&["denote", "fdouble f 0"]);
    assert_eq!(code, 0);
    assert_eq!(first_line(&out), "_|_, 0, s _|_, s (s _|_), s (s 0)");
    assert!(out.contains("complete_at_bound: true"));
    assert_eq!(first_line(&ex1(&["denote", "0"]).1), "_|_, 0");

    let path = programs().join("extra_var.crwl");
    let (code, out) = hocrwl(&[
        "-p",
        path.to_str().unwrap(),
        "--extra-variables",
        "denote",
        "f 0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(first_line(&out), "_|_");
    assert!(out.contains("complete_at_bound: false"));
}

#[test]
fn extra_variables_need_the_flag() {
    let path = programs().join("extra_var.crwl");
    let (code, out) = hocrwl(&["-p", path.to_str().unwrap(), "denote", "f 0"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("error:"), "{out}");
}

#[test]
fn observe_examples() {
    assert_eq!(
        first_line(&ex1(&["observe", "--fo", "fdouble f' 0"]).1),
        "0, s 0, s (s 0)"
    );
    assert_eq!(first_line(&ex1(&["observe", "f"]).1), "g, h");
    let (code, out) = ex1(&["observe", "--fo", "f"]);
    assert_eq!((code, first_line(&out)), (0, ""));
}

#[test]
fn ext_equiv_examples() {
    assert_eq!(
        first_line(&ex1(&["ext-equiv", "f", "f'", "1"]).1),
        "equivalent-at-bound"
    );
    assert_eq!(
        first_line(&ex1(&["ext-equiv", "g", "h", "1"]).1),
        "distinguished at 0"
    );
    let (code, out) = ex1(&["ext-equiv", "f", "f", "3"]);
    assert_eq!(code, 0);
    assert_eq!(first_line(&out), "equivalent-at-bound");
    assert!(out.contains("not a proof"));
}

#[test]
fn distinguish_examples() {
    let (code, out) = ex1(&["distinguish", "fdouble f 0", "fdouble f' 0"]);
    assert_eq!(code, 0);
    assert!(out.contains("witness: s 0 (right only)"), "{out}");
    assert!(out.contains("context: g_{s_0} [ ]"));
    assert!(out.contains("g_{s_0} (s X1) -> s (g_0 X1)"));
    let (_, out) = ex1(&["distinguish", "f 0", "f 0"]);
    assert_eq!(first_line(&out), "no difference found at bound");
    let (_, out) = ex1(&["distinguish", "f", "f'"]);
    assert_eq!(first_line(&out), "witness: g (left only)");
}

#[test]
fn emitted_extension_reruns() {
    let (_, out) = ex1(&["--json", "distinguish", "fdouble f 0", "fdouble f' 0"]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let src = doc["extension"].as_str().unwrap();
    let base = parse_programs(
        &[PRELUDE, include_str!("../programs/ex1.crwl")],
        ProgramFlags::default(),
    )
    .unwrap();
    let ext = parse_extension(src, &base, ProgramFlags::default()).unwrap();
    assert_eq!(ext.rules().len(), 2);

    let dir = std::env::temp_dir().join(format!("hocrwl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("ext.crwl");
    std::fs::write(&file, src).unwrap();
    let (code, out) = ex1(&[
        "check",
        "safe-ext",
        "--extension",
        file.to_str().unwrap(),
        "--expr",
        "fdouble f 0",
        "--expr",
        "fdouble f' 0",
    ]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("SafeExt: pass: 2 passed"), "{out}");
}

#[test]
fn json_output_reparses() {
    let base = parse_programs(
        &[PRELUDE, include_str!("../programs/ex1.crwl")],
        ProgramFlags::default(),
    )
    .unwrap();
    let reparse = |s: &str| {
        parse_expr_with(s, base.signature(), ExprOptions { allow_bottom: true })
            .unwrap_or_else(|e| panic!("{s}: {e}"));
    };
    let (code, out) = ex1(&["--json", "denote", "fdouble f' 0", "--emit-proof", "s 0"]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&out).unwrap();
    for v in doc["elements"].as_array().unwrap() {
        reparse(v.as_str().unwrap());
    }
    fn walk(v: &Value, f: &dyn Fn(&str)) {
        f(v["conclusion"]["expr"].as_str().unwrap());
        f(v["conclusion"]["value"].as_str().unwrap());
        for p in v["premises"].as_array().unwrap() {
            walk(p, f);
        }
    }
    walk(&doc["proof"], &reparse);

    let (_, out) = ex1(&["--json", "distinguish", "fdouble f 0", "fdouble f' 0"]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    reparse(doc["witness"].as_str().unwrap());
    let ext = parse_extension(
        doc["extension"].as_str().unwrap(),
        &base,
        ProgramFlags::default(),
    )
    .unwrap();
    parse_context(doc["context"].as_str().unwrap(), ext.signature()).unwrap();
}

#[test]
fn emit_proof_of_missing_element_fails() {
    let (code, out) = ex1(&["denote", "fdouble f 0", "--emit-proof", "s 0"]);
    assert_eq!(code, 2);
    assert!(out.contains("not derivable"), "{out}");
}

#[test]
fn check_suites() {
    for suite in ["compositionality", "oracle", "safe-ext", "hat"] {
        let (code, out) = ex1(&["check", suite]);
        assert_eq!(code, 0, "{suite}: {out}");
        assert!(out.contains(": pass:"), "{suite}: {out}");
    }
    let (code, out) = hocrwl(&["check", "oracle", "--programs", "5", "--cases", "5"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn expected_violation_exits_zero() {
    let base = programs().join("extra_var.crwl");
    let ext = programs().join("g_extension.crwl");
    let (code, out) = hocrwl(&[
        "-p",
        base.to_str().unwrap(),
        "--extra-variables",
        "--pattern-size",
        "3",
        "check",
        "safe-ext",
        "--extension",
        ext.to_str().unwrap(),
        "--expr",
        "f 0",
        "--expr",
        "f 1",
    ]);
    assert_eq!(code, 0);
    assert!(
        out.contains("violation (expected: extra variables)"),
        "{out}"
    );
    assert!(out.contains("gained [1]"));
}

#[test]
fn trace_ends_in_a_value() {
    let (code, out) = ex1(&["--seed", "3", "trace", "fdouble f 0"]);
    assert_eq!(code, 0);
    assert!(out.trim_start().starts_with("fdouble f 0"));
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("-> "), "{out}");
}

#[test]
fn prelude_from_environment() {
    let dir = std::env::temp_dir().join(format!("hocrwl-prelude-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("prelude.crwl");
    std::fs::write(&file, "constructor 0/0\nplus X Y -> X\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hocrwl"))
        .args(["--prelude", "denote", "plus 0 0"])
        .env("HOCRWL_PRELUDE", &file)
        .output()
        .unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(
        first_line(&String::from_utf8(out.stdout).unwrap()),
        "_|_, 0"
    );
}
