use std::path::Path;
use std::process::Command;

const EXPORTS: &[&str] = &[
    "wexch_version",
    "wexch_last_error_message",
    "wexch_string_free",
    "wexch_weight_seq_from_json",
    "wexch_weight_seq_free",
    "wexch_weight_seq_alphabet_size",
    "wexch_weight_at",
    "wexch_log_permanent",
    "wexch_conditional_weights",
    "wexch_check_conditions_json",
    "wexch_sample",
    "wexch_recover",
    "wexch_total_variation",
    "wexch_run_experiment",
];

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wexch.h");
    std::fs::read_to_string(path).expect("build.rs writes include/wexch.h")
}

#[test]
fn header_declares_every_export() {
    let h = header();
    for name in EXPORTS {
        assert!(h.contains(&format!(" {name}(")) || h.contains(&format!("*{name}(")), "{name} missing");
    }
    assert!(h.contains("typedef struct WexchWeightSeq WexchWeightSeq;"));
    assert!(h.contains("WEXCH_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler on PATH; header syntax check not run");
        return;
    };
    let dir = tempdir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"wexch.h\"\nint main(void) {\n  WexchWeightSeq *s = 0;\n  WexchStatus st = wexch_weight_seq_from_json(\"{}\", &s);\n  wexch_weight_seq_free(s);\n  return st == WEXCH_STATUS_OK;\n}\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("wexch-ffi-header-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
