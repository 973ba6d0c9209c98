//! Compiles and runs a C program against the generated header and the
//! shared library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "dle_correspond.h"

int main(void) {
    DleSignature *sig = NULL;
    if (dle_signature_builtin("modal", &sig) != DLE_STATUS_OK) return 10;
    DleLabel label;
    if (dle_classify(sig, "box(p) <= box(box(p))", &label) != DLE_STATUS_OK) return 11;
    if (label != DLE_LABEL_VERY_SIMPLE_SAHLQVIST) return 12;
    char *out = NULL;
    if (dle_to_kracht(sig, "box(p) <= box(box(p))", &out) != DLE_STATUS_OK) return 13;
    printf("%s\n", out);
    dle_string_free(out);
    if (dle_alba(sig, "box(", &out) != DLE_STATUS_PARSE) return 14;
    if (dle_last_error() == NULL) return 15;
    dle_signature_free(sig);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(
        profile_dir.join("libdle_correspond_ffi.so").exists() || profile_dir.join("libdle_correspond_ffi.dylib").exists(),
        "shared library missing in {}",
        profile_dir.display()
    );
    let work = std::env::temp_dir().join(format!("dle_ffi_c_{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    let exe = work.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let rpath = format!("-Wl,-rpath,{}", profile_dir.display());
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&profile_dir)
        .args(["-ldle_correspond_ffi", &rpath, "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(!stdout.trim().is_empty());
    let _ = std::fs::remove_dir_all(&work);
}
