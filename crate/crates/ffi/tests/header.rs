use std::path::Path;
use std::process::Command;

#[test]
fn header_declares_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/btensor.h"))
            .unwrap();
    for sym in [
        "typedef struct BtTensor BtTensor;",
        "bt_tensor_new_dense",
        "bt_tensor_from_json",
        "bt_tensor_free",
        "bt_classify",
        "bt_norm_bounds",
        "bt_eigen_bounds",
        "bt_tcp_solve",
        "bt_tcp_lower_bounds",
        "bt_last_error_message",
        "BT_STATUS_OK = 0",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"btensor.h\"\nint main(void) { BtStatus s = BT_STATUS_OK; (void)bt_version; return (int)s; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
