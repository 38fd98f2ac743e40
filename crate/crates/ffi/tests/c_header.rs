//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on the PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "hocrwl.h"

int main(void) {
    const char *src = "g X -> 0\nh X -> s 0\nf -> g\nf -> h\nfdouble F -> fadd F F\n"
                      "fadd F G X -> (F X) + (G X)\n";
    HocrwlProgram *p = NULL;
    if (hocrwl_program_parse(src, true, false, false, &p) != HOCRWL_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", hocrwl_last_error());
        return 1;
    }
    HocrwlBudget budget = {0, 0, 0};
    char *json = NULL;
    if (hocrwl_denote(p, "fdouble f 0", budget, &json) != HOCRWL_STATUS_OK) {
        return 2;
    }
    printf("%s\n", json);
    hocrwl_string_free(json);
    if (hocrwl_denote(p, "nope", budget, &json) != HOCRWL_STATUS_PARSE_ERROR) {
        return 3;
    }
    printf("%s\n", hocrwl_last_error());
    hocrwl_program_free(p);
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()?
        .status
        .success()
        .then_some(cc)
}

/// The directory holding the library artifacts, two levels above the test
/// binary in `deps/`.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn static_lib(dir: &Path) -> PathBuf {
    dir.join(if cfg!(windows) {
        "hocrwl_ffi.lib"
    } else {
        "libhocrwl_ffi.a"
    })
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    if cfg!(windows) {
        return;
    }
    let dir = artifact_dir();
    let lib = static_lib(&dir);
    assert!(lib.exists(), "{} missing", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = std::env::temp_dir().join(format!("hocrwl-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let source = work.join("smoke.c");
    let exe = work.join("smoke");
    std::fs::write(&source, PROGRAM).unwrap();

    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&source)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "compilation failed");
    let out = Command::new(&exe).output().unwrap();
    std::fs::remove_dir_all(&work).unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    let doc: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(doc["elements"][4], "s (s 0)");
    assert!(lines.next().unwrap().contains("undeclared symbol `nope`"));
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hocrwl.h"))
            .unwrap();
    for f in [
        "hocrwl_program_parse",
        "hocrwl_program_free",
        "hocrwl_program_source",
        "hocrwl_denote",
        "hocrwl_derive",
        "hocrwl_observe",
        "hocrwl_ext_equiv",
        "hocrwl_distinguish",
        "hocrwl_string_free",
        "hocrwl_last_error",
        "hocrwl_version",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct HocrwlProgram HocrwlProgram;"));
}
