use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "arscope.h"

int main(void) {
    ArsPopulation *pop = NULL;
    ArsModel *model = NULL;
    double ar = 0.0, se = 0.0;
    if (ars_population_generate(5, 4, 30, 1, &pop) != ARS_STATUS_OK) return 1;
    if (ars_population_normalize(pop) != ARS_STATUS_OK) return 2;
    if (ars_model_train(pop, 0, ARS_ALGORITHM_LINEAR_SVM, 0.7, 3, &model) != ARS_STATUS_OK) return 3;
    if (ars_estimate_ar(model, 10000, 1, 0.5, &ar, &se) != ARS_STATUS_OK) return 4;
    if (ars_model_score(NULL, NULL, 0, &ar) != ARS_STATUS_NULL_POINTER) return 5;
    if (ars_last_error() == NULL) return 6;
    printf("%s %.4f\n", ars_version(), ar);
    ars_model_free(model);
    ars_population_free(pop);
    return 0;
}
"#;

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

// target/<profile>/deps/<test binary> -> target/<profile>
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(include_dir().join("arscope.h")).unwrap();
    for name in [
        "ars_version",
        "ars_last_error",
        "ars_population_generate",
        "ars_population_load_csv",
        "ars_model_train",
        "ars_model_free",
        "ars_estimate_ar",
        "ars_beta_noise",
        "ars_region_volume",
        "typedef struct ArsModel ArsModel",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = artifact_dir().join("libarscope_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
}
