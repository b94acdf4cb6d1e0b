//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on the path.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "evofrac.h"

int main(void) {
    const char *law_text = "dim = 1\nfrac 0.5 = 1\nm1 = 1\n";
    EvofracLaw *law = NULL;
    if (evofrac_law_parse(law_text, &law) != EVOFRAC_STATUS_OK) return 1;
    double sym[2];
    if (evofrac_law_symbol(law, 0.0, 4.0, sym, 2) != EVOFRAC_STATUS_OK) return 2;
    /* M(1/4) = 4^-0.5 + 1/4 */
    if (sym[0] < 0.7499999 || sym[0] > 0.7500001) return 3;

    EvofracGrid *grid = NULL;
    if (evofrac_grid_new(0.0, 0.1, 100, 1.0, &grid) != EVOFRAC_STATUS_GRID) return 4;
    if (strncmp(evofrac_last_error(), "timegrid:", 9) != 0) return 5;
    evofrac_law_free(law);
    printf("ok\n");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("evofrac.h").is_file());
    let lib = target_dir().join("libevofrac_ffi.a");
    if !lib.is_file() {
        eprintln!("{} not built, skipping link step", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "smoke program exit");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
