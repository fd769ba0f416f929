//! Compiles and runs a small C program against the generated header and
//! the cdylib, proving the ABI from the consumer side. Skips (with a note)
//! when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "amlgen.h"

int main(void) {
    if (amlgen_version() == NULL) return 1;

    /* Null arguments must fail cleanly with a readable error. */
    struct AmlgenRun *run = amlgen_run_new(NULL, NULL);
    if (run != NULL) return 2;
    char *err = amlgen_last_error_message();
    if (err == NULL || strlen(err) == 0) return 3;
    amlgen_string_free(err);

    /* Status codes are stable integers. */
    if (amlgen_run_set_seed(NULL, 7) != AMLGEN_STATUS_NULL_ARGUMENT) return 4;

    /* Freeing null handles is a no-op. */
    amlgen_run_free(NULL);
    amlgen_string_free(NULL);
    return 0;
}
"#;

fn find_compiler() -> Option<&'static str> {
    ["cc", "clang", "gcc"]
        .into_iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok())
}

#[test]
fn c_program_compiles_and_runs() {
    let Some(cc) = find_compiler() else {
        eprintln!("no C compiler on PATH; skipping C smoke test");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let lib_dir = manifest.join("../../target").join(profile);
    let lib = lib_dir.join("libamlgen_ffi.so");
    if !lib.exists() {
        eprintln!(
            "cdylib not found at {}; skipping C smoke test",
            lib.display()
        );
        return;
    }

    let tmp = tempfile::tempdir().unwrap();
    let source = tmp.path().join("smoke.c");
    std::fs::write(&source, C_PROGRAM).unwrap();
    let binary = tmp.path().join("smoke");

    let compile = Command::new(cc)
        .arg(&source)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lamlgen_ffi")
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("compiler invocation");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke binary exited {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
}
