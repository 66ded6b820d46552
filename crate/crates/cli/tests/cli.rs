use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn egalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egalg"))
        .args(args)
        .env_remove("EGALG_CATALOG_DIR")
        .output()
        .expect("spawn egalg")
}

/// Runs with `--output <tmp>` and returns (status, report).
fn run_json(name: &str, args: &[&str]) -> (i32, Value) {
    let out = scratch(name);
    let mut full = args.to_vec();
    full.extend(["--no-timestamp", "--output", out.to_str().unwrap()]);
    let o = egalg(&full);
    let report = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    (o.status.code().unwrap(), report)
}

fn item<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["items"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["name"] == name)
        .unwrap_or_else(|| panic!("no item {name}"))
}

#[test]
fn minkowski_mode_i_has_zero_residual() {
    let (code, r) = run_json(
        "mink.json",
        &["einstein-check", "--metric", "minkowski", "--mode", "i"],
    );
    assert_eq!(code, 0);
    assert_eq!(r["schema"], "1");
    let m = item(&r, "minkowski");
    assert_eq!(m["verdict"]["verdict"], "einstein_algebra");
    assert_eq!(m["max_residual"], 0.0);
    for row in m["residual"].as_array().unwrap() {
        assert!(row.as_array().unwrap().iter().all(|c| c == "0"));
    }
}

#[test]
fn wrong_lambda_fails_with_status_1() {
    let (code, r) = run_json(
        "schw.json",
        &[
            "einstein-check",
            "--metric",
            "schwarzschild",
            "--lambda",
            "-1/2",
        ],
    );
    assert_eq!(code, 1);
    assert_eq!(r["failures"], serde_json::json!(["schwarzschild"]));
    assert_eq!(
        item(&r, "schwarzschild")["verdict"]["verdict"],
        "not_einstein"
    );
}

#[test]
fn singularity_demo_reports_point_classes() {
    let (code, r) = run_json("sing.json", &["singularity", "demo"]);
    assert_eq!(code, 0);
    let unit = item(&r, "singularity/classify/1");
    assert_eq!(unit["classification"]["class"], "unit_point");
    assert!(!unit["classification"]["report"].is_null());
    let soul = item(&r, "singularity/soul/linear_soul_bearing");
    assert_eq!(soul["category"], "linear");
    assert_eq!(soul["outcome"], "soul_bearing");
    assert!(item(&r, "singularity/classify/1+b1")["precondition_error"].is_string());
}

#[test]
fn singularity_accepts_supplied_inputs() {
    let rho = r#"{"n":2,"terms":[{"blade":[],"coeff":"1"}]}"#;
    let (code, r) = run_json(
        "sing2.json",
        &[
            "singularity",
            "demo",
            "--function",
            "x^2 - x^2 + 3",
            "--rho1",
            rho,
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(
        item(&r, "singularity/supplied/function/000")["prolongation"]["result"],
        "prolongs"
    );
    assert_eq!(
        item(&r, "singularity/supplied/rho_1/000")["classification"]["class"],
        "unit_point"
    );
}

#[test]
fn radial_infall_smooth_collapses_to_unit_point() {
    let (code, r) = run_json(
        "curve.json",
        &[
            "supercurve",
            "--curve",
            "radial_infall",
            "--category",
            "smooth",
        ],
    );
    assert_eq!(code, 0);
    let e = item(&r, "supercurve/radial_infall/11/smooth/endpoint");
    assert_eq!(e["endpoint"]["endpoint"], "collapsed");
    assert_eq!(e["endpoint"]["class"], "unit_point");
}

#[test]
fn odd_smooth_supercurve_is_a_verification_failure() {
    let (code, r) = run_json(
        "odd.json",
        &["supercurve", "--curve", "radial_infall", "--grading", "01"],
    );
    assert_eq!(code, 1);
    assert!(r["failures"][0].as_str().unwrap().ends_with("/lift"));
}

#[test]
fn parse_errors_exit_2() {
    let out = scratch("unused.json");
    let out = out.to_str().unwrap();
    for args in [
        vec!["einstein-check", "--metric", "no_such_metric", "-o", out],
        vec![
            "einstein-check",
            "--metric",
            "minkowski",
            "--mode",
            "iii",
            "-o",
            out,
        ],
        vec![
            "einstein-check",
            "--metric",
            "minkowski",
            "--lambda",
            "1 +",
            "-o",
            out,
        ],
        vec![
            "supercurve",
            "--curve",
            "circular",
            "--grading",
            "02",
            "-o",
            out,
        ],
        vec!["grassmann", "frobnicate"],
        vec![
            "einstein-check",
            "--metric",
            "minkowski",
            "--tolerance",
            "-1",
            "-o",
            out,
        ],
    ] {
        assert_eq!(egalg(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn metric_files_resolve_through_catalog_dir() {
    let dir = scratch("catalog");
    std::fs::create_dir_all(&dir).unwrap();
    let metric = r#"{
        "name": "flat_polar",
        "coords": ["r", "p"],
        "domain": {"r": ["1/2", "3"], "p": ["0", "3"]},
        "riemannian": true,
        "g": [["1", "0"], ["0", "r^2"]],
        "lambda": "0",
        "mode": "ii"
    }"#;
    std::fs::write(dir.join("flat_polar.json"), metric).unwrap();
    let out = scratch("polar.json");
    let o = Command::new(env!("CARGO_BIN_EXE_egalg"))
        .args([
            "einstein-check",
            "--metric",
            "flat_polar",
            "--no-timestamp",
            "-o",
            out.to_str().unwrap(),
        ])
        .env("EGALG_CATALOG_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(
        item(&r, "flat_polar")["verdict"]["verdict"],
        "einstein_algebra"
    );
}

#[test]
fn reports_are_byte_identical_without_timestamp() {
    let run = |name: &str| {
        let out = scratch(name);
        let o = egalg(&[
            "supersheaf",
            "check",
            "--seed",
            "7",
            "--no-timestamp",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("det1.json"), run("det2.json"));
}

#[test]
fn timestamp_is_present_unless_suppressed() {
    let out = scratch("ts.json");
    let o = egalg(&["grassmann", "selftest", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(r["timestamp"].as_str().unwrap().starts_with("unix:"));
    assert_eq!(r["seed"], 42);
    assert!(String::from_utf8_lossy(&o.stdout).contains("grassmann selftest: passed"));
}

#[test]
fn dash_output_prints_json_only() {
    let o = egalg(&[
        "lift-check",
        "--metric",
        "minkowski",
        "--no-timestamp",
        "-o",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["command"], "lift-check");
    assert_eq!(item(&r, "lift/minkowski")["passed"], true);
}
