use std::path::PathBuf;
use std::process::Command;

use btensor::cli::run;
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("btensor").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn classify_fixture() {
    let (code, out, _) = call(&["classify", &fixture("ex41.json")]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "B");
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"order\": 3,\n  \"dim\": \n}").unwrap();
    let (code, out, err) = call(&["classify", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line"), "{err}");
}

#[test]
fn dimension_mismatch_is_usage_error() {
    let (code, _, err) = call(&["tcp", "solve", &fixture("ex41.json"), "--q", "[-1,-1]"]);
    assert_eq!(code, 2);
    assert!(err.contains("dimension"), "{err}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&[]).0, 2);
}

#[test]
fn gen_is_deterministic_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let code = call(&[
            "gen",
            "--m",
            "4",
            "--n",
            "3",
            "--kind",
            "B",
            "--seed",
            "1",
            "--out",
            p.to_str().unwrap(),
        ])
        .0;
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (_, out, _) = call(&["classify", a.to_str().unwrap()]);
    assert_eq!(json(&out)["verdict"], "B");

    let (code, out, _) = call(&["gen", "--m", "3", "--n", "3", "--kind", "B0", "--seed", "5"]);
    assert_eq!(code, 0);
    std::fs::write(&a, &out).unwrap();
    assert_eq!(
        json(&call(&["classify", a.to_str().unwrap()]).1)["verdict"],
        "B0"
    );

    let (_, out, _) = call(&["gen", "--m", "3", "--n", "2", "--kind", "diagonal"]);
    let t = btensor::io::parse_tensor(&out).unwrap();
    assert_eq!(t, btensor::Tensor::unit_diagonal(3, 2).unwrap());
}

#[test]
fn bounds_json_and_csv() {
    let f = fixture("ex41.json");
    let (code, out, _) = call(&[
        "bounds",
        &f,
        "--op",
        "T",
        "--norm",
        "inf",
        "--estimate",
        "--samples",
        "64",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["b_upper"], 54.0);
    assert_eq!(v["general_upper"], 57.0);
    assert_eq!(v["sandwich_holds"], true);

    let (code, out, _) = call(&[
        "bounds", &f, "--op", "F", "--norm", "p", "--p", "2", "--format", "csv",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("operator,norm"));
}

#[test]
fn eigen_and_semipositive() {
    let f = fixture("ex41.json");
    let (code, out, _) = call(&[
        "eigen",
        &f,
        "--kind",
        "z",
        "--starts",
        "16",
        "--verify-bounds",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(!v["pairs"].as_array().unwrap().is_empty());
    assert_eq!(v["bounds"]["all_within"], true);

    let (code, out, _) = call(&["semipositive", &f, "--mode", "strict", "--grid", "12"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["points_checked"], 91);
}

#[test]
fn semipositive_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(
        &path,
        btensor::io::to_dense_json(&btensor::Tensor::unit_diagonal(3, 2).unwrap().scaled(-1.0)),
    )
    .unwrap();
    let (code, out, _) = call(&["semipositive", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["worst_point"], serde_json::json!([1.0, 0.0]));
    let (code, _, _) = call(&["eigen", path.to_str().unwrap(), "--verify-bounds"]);
    assert_eq!(code, 1);
}

#[test]
fn tcp_subcommands() {
    let f = fixture("ex41.json");
    let (code, out, _) = call(&["tcp", "solve", &f, "--q", "[-1,-1,-1]"]);
    assert_eq!(code, 0);
    let sol = json(&out);
    assert_eq!(sol["converged"], true);
    let x = serde_json::to_string(&sol["x"]).unwrap();

    let (code, out, _) = call(&["tcp", "verify", &f, "--q", "[-1,-1,-1]", "--x", &x]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["certificate"]["holds"], true);

    let (code, _, _) = call(&["tcp", "verify", &f, "--q", "[-1,-1,-1]", "--x", "[5,5,5]"]);
    assert_eq!(code, 1);

    let (code, out, _) = call(&["tcp", "bounds", &f, "--q", "[-1,-1,-1]"]);
    assert_eq!(code, 0);
    assert!((json(&out)["lb_inf"].as_f64().unwrap() - 1.0 / 162.0).abs() < 1e-15);

    let (code, out, _) = call(&[
        "tcp",
        "probe",
        &fixture("ex42.json"),
        "--q",
        "[-1,-1,-1,-1]",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["bounded"], true);
}

#[test]
fn manifest_written_and_report_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    let f = fixture("ex41.json");
    let (_, plain, _) = call(&["classify", &f]);
    let (code, out, _) = call(&["--manifest", m.to_str().unwrap(), "classify", &f]);
    assert_eq!(code, 0);
    assert_eq!(plain, out);
    let manifest = json(&std::fs::read_to_string(&m).unwrap());
    assert_eq!(manifest["report"], json(&out));
    assert_eq!(manifest["input_hashes"][0][1].as_str().unwrap().len(), 64);
    assert!(manifest["wall_clock_ms"].is_u64());
}

#[test]
fn seed_env_fallback() {
    let bin = env!("CARGO_BIN_EXE_btensor");
    let run_with = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(bin);
        c.args(args).env_remove("BTENSOR_SEED");
        if let Some(s) = env {
            c.env("BTENSOR_SEED", s);
        }
        c.output().unwrap().stdout
    };
    let gen = ["gen", "--m", "3", "--n", "3", "--kind", "random"];
    let by_env = run_with(Some("11"), &gen);
    let by_flag = run_with(None, &[&gen[..], &["--seed", "11"]].concat());
    let default = run_with(None, &gen);
    assert_eq!(by_env, by_flag);
    assert_ne!(by_env, default);
}

#[test]
fn golden_run_is_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_btensor");
    let a = Command::new(bin)
        .args(["verify-paper", "--seed", "7"])
        .output()
        .unwrap();
    let b = Command::new(bin)
        .args(["verify-paper", "--seed", "7"])
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(std::str::from_utf8(&a.stdout).unwrap())["failed"], 0);
}
