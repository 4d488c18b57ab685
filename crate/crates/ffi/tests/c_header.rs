//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "spbandit.h"

int main(void) {
    const double theta[15] = {
        0.85, 0.65, 0.15, 0.30, 0.45,
        0.30, 0.90, 0.50, 0.60, 0.70,
        0.10, 0.60, 0.25, 0.55, 0.95,
    };
    const uint32_t costs[5] = {1, 1, 1, 1, 1};
    SpbInstance *inst = NULL;
    if (spb_instance_new(3, 5, theta, costs, 5, 100, &inst) != SPB_STATUS_OK) return 1;
    size_t assignment[3];
    double value = 0.0;
    if (spb_sp_matching(inst, assignment, &value) != SPB_STATUS_OK) return 2;
    printf("%.2f %zu %zu %zu\n", value, assignment[0], assignment[1], assignment[2]);
    spb_instance_free(inst);

    SpbStatus s = spb_instance_new(3, 5, NULL, costs, 5, 100, &inst);
    char msg[128];
    spb_last_error_message(msg, sizeof msg);
    printf("%d %s\n", (int)s, msg);
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn c_program_links_and_runs() {
    if !have_cc() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // Test builds only produce the rlib, so build the archive next to the
    // test binary (target/<profile>/deps/..).
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let target_dir = lib_dir.parent().unwrap();
    let built = Command::new(env!("CARGO"))
        .args([
            "build",
            "--quiet",
            "--profile",
            "test",
            "-p",
            "spbandit-ffi",
            "--lib",
        ])
        .arg("--target-dir")
        .arg(target_dir)
        .current_dir(&crate_dir)
        .status()
        .unwrap();
    assert!(built.success());
    let archive = lib_dir.join("libspbandit_ffi.a");
    assert!(archive.exists(), "missing {}", archive.display());

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    let bin = work.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("2.70 0 1 4"));
    assert_eq!(lines.next(), Some("1 `theta` is null"));
}
