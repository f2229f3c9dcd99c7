use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

struct Run {
    code: i32,
    json: Value,
    stdout: String,
}

fn ncert_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ncert"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn ncert");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap_or(-1), json, stdout }
}

fn ncert(args: &[&str]) -> Run {
    ncert_env(args, &[])
}

fn ok(args: &[&str]) -> Value {
    let r = ncert(args);
    assert_eq!(r.code, 0, "ncert {args:?} failed: {}", r.stdout);
    assert_eq!(r.json["status"], "ok");
    assert!(r.json["timing_ms"].is_number());
    r.json
}

fn save(dir: &tempfile::TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn verify(args: &[&str], saved: &Path) -> Value {
    let mut a = args.to_vec();
    let s = saved.to_string_lossy().into_owned();
    a.extend(["--verify", &s]);
    ok(&a)
}

#[test]
fn quartic_is_not_convex() {
    let out = ok(&["convex", "--poly", "x^4", "--vars", "1"]);
    assert_eq!(out["result"]["convex"], false);
    assert!(out["result"]["counterexample"]["gap_min_eig"].as_f64().unwrap() < 0.0);
    let dir = tempfile::tempdir().unwrap();
    let saved = save(&dir, "c.json", &out);
    assert_eq!(verify(&["convex", "--poly", "x^4"], &saved)["result"]["valid"], true);
}

#[test]
fn convex_certificate_roundtrip() {
    let out = ok(&["convex", "--poly", "x^2 + x*y + y*x + y^2"]);
    assert_eq!(out["result"]["convex"], true);
    let dir = tempfile::tempdir().unwrap();
    let saved = save(&dir, "c.json", &out);
    assert_eq!(verify(&["convex", "--poly", "x^2 + x*y + y*x + y^2"], &saved)["result"]["valid"], true);
}

#[test]
fn seed_controls_sampling() {
    let a = ok(&["convex", "--poly", "x^4", "--seed", "7"]);
    let b = ok(&["convex", "--poly", "x^4", "--seed", "7"]);
    assert_eq!(a["result"]["counterexample"], b["result"]["counterexample"]);
    let c = ok(&["convex", "--poly", "x^4"]);
    assert_ne!(a["result"]["counterexample"], c["result"]["counterexample"]);
}

#[test]
fn domination_with_certificate() {
    let out = ok(&["dominate", "--L1", &data("disk2.json"), "--L2", &data("disk3.json")]);
    assert_eq!(out["result"]["dominated"], true);
    assert!(out["residuals"]["isometry"].as_f64().unwrap() <= 1e-8);
    assert!(out["residuals"]["coefficients"].as_f64().unwrap() <= 1e-8);
    assert!(out["certificate"]["mu"].as_u64().unwrap() >= 1);
    let dir = tempfile::tempdir().unwrap();
    let saved = save(&dir, "d.json", &out);
    let args = ["dominate", "--L1", &data("disk2.json"), "--L2", &data("disk3.json")];
    assert_eq!(verify(&args, &saved)["result"]["valid"], true);

    // a damaged certificate is rejected without re-solving
    let mut bad = out.clone();
    bad["certificate"]["V"][0][0][0] = Value::from(5.0);
    let saved = save(&dir, "bad.json", &bad);
    assert_eq!(verify(&args, &saved)["result"]["valid"], false);
}

#[test]
fn reverse_domination_fails_with_witness() {
    let out = ok(&["dominate", "--L1", &data("disk3.json"), "--L2", &data("disk2.json")]);
    assert_eq!(out["result"]["dominated"], false);
    assert_eq!(out["result"]["status"], "not_dominated");
    assert!(out.get("certificate").is_none());
}

#[test]
fn eval_and_input_errors() {
    let out = ok(&["eval", "--poly", "x^2 + y", "--X", &data("point.json")]);
    let v = &out["result"]["value"];
    assert!((v[0][0].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v[0][1].as_f64().unwrap() - 0.75).abs() < 1e-12);

    let bad = ncert(&["eval", "--poly", "x1^2", "--X", &data("bad_sizes.json")]);
    assert_eq!(bad.code, 2);
    assert_eq!(bad.json["status"], "input_error");
    assert_eq!(ncert(&["eval", "--poly", "x1^", "--X", &data("point.json")]).code, 2);
    assert_eq!(ncert(&["eval", "--poly", "x3", "--vars", "2", "--X", &data("point.json")]).code, 2);
    assert_eq!(ncert(&["sos", "--poly", "x", "--free"]).code, 2);
    assert_eq!(ncert(&["frobnicate"]).code, 2);
    assert_eq!(ncert(&[]).code, 2);
    assert_eq!(ncert(&["radius", "--L", "/nonexistent.json"]).code, 2);
}

#[test]
fn solver_failure_exit_code() {
    let r = ncert_env(&["sos", "--poly", "(1 + x + y + x*y + y*x)^2"], &[("NCERT_SDP_MAXDIM", "3")]);
    assert_eq!(r.code, 3, "{}", r.stdout);
    assert_eq!(r.json["status"], "solver_failure");
}

#[test]
fn sos_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["sos", "--poly", "x'*x + x*x' + 1", "--free"]);
    assert_eq!(out["result"]["sos"], true);
    let saved = save(&dir, "s.json", &out);
    assert_eq!(verify(&["sos", "--poly", "x'*x + x*x' + 1", "--free"], &saved)["result"]["valid"], true);
    // the same certificate does not prove a different polynomial
    assert_eq!(verify(&["sos", "--poly", "x'*x + x*x' + 2", "--free"], &saved)["result"]["valid"], false);

    let out = ok(&["sos", "--poly", "x^2 - 1"]);
    assert_eq!(out["result"]["sos"], false);
    assert!(out["result"]["dual"]["value"].as_f64().unwrap() < 0.0);
}

#[test]
fn cyclic_sos_and_trace_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = "x*y^2*x + y*x^2*y";
    let out = ok(&["cyc-sos", "--poly", p]);
    assert_eq!(out["result"]["sos"], true);
    assert_eq!(out["certificate"]["cyclic"], true);
    let saved = save(&dir, "c.json", &out);
    assert_eq!(verify(&["cyc-sos", "--poly", p], &saved)["result"]["valid"], true);
    assert_eq!(ncert(&["sos", "--poly", p, "--verify", &saved.to_string_lossy()]).code, 2);

    assert_eq!(ok(&["trace-zero", "--poly", "x*y - y*x"])["result"]["trace_zero"], true);
    assert_eq!(ok(&["trace-zero", "--poly", "x*y"])["result"]["trace_zero"], false);
    assert_eq!(ok(&["cyceq", "--poly", "x*y*z", "--other", "z*x*y"])["result"]["cyclically_equivalent"], true);
    assert_eq!(ok(&["cyceq", "--poly", "x*y*z", "--other", "x*z*y"])["result"]["cyclically_equivalent"], false);
}

#[test]
fn eigenvalue_bound_and_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    let f = "x^4 - 2*x^2";
    let out = ok(&["eigopt", "--poly", f]);
    assert!((out["result"]["f_star"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    assert!(out["result"]["moments"]["1"].as_f64().is_some());
    let saved = save(&dir, "e.json", &out);
    assert_eq!(verify(&["eigopt", "--poly", f], &saved)["result"]["valid"], true);

    let m = ok(&["minimizer", "--poly", f]);
    assert_eq!(m["result"]["found"], true);
    assert!((m["result"]["value"].as_f64().unwrap() + 1.0).abs() < 1e-4);

    let u = ok(&["eigopt", "--poly", "x + x'", "--free"]);
    assert_eq!(u["result"]["bounded"], false);
}

#[test]
fn module_and_ideal_membership() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["qm", "--poly", "2 - x - x'", "--q", "1 - x'*x", "--degree", "2", "--free"];
    let out = ok(&args);
    assert_eq!(out["result"]["member"], true);
    let saved = save(&dir, "q.json", &out);
    assert_eq!(verify(&args, &saved)["result"]["valid"], true);

    let out = ok(&["qm", "--poly", "-1", "--q", "1 - x'*x", "--q", "-(x'*x + x*x')^2", "--degree", "2", "--free"]);
    assert_eq!(out["result"]["member"], false);

    let args = ["ideal", "--poly", "x^2 + y*x", "--q", "x", "--degree", "2"];
    let out = ok(&args);
    assert_eq!(out["result"]["member"], true);
    assert_eq!(out["certificate"]["cofactors"][0], "x1 + x2");
    let saved = save(&dir, "i.json", &out);
    assert_eq!(verify(&args, &saved)["result"]["valid"], true);
    assert_eq!(ok(&["ideal", "--poly", "x'", "--q", "x", "--degree", "3", "--free"])["result"]["member"], false);
}

#[test]
fn derivative_verb() {
    let out = ok(&["derivative", "--poly", "x^3", "--order", "3", "--sos"]);
    assert_eq!(out["result"]["sos"], false);
    let out = ok(&[
        "derivative",
        "--poly",
        "x^2",
        "--vars",
        "2",
        "--order",
        "1",
        "--X",
        &data("point.json"),
        "--H",
        &data("point.json"),
    ]);
    // p'(X)[X] = 2X² for p = x²
    let v = &out["result"]["value"];
    assert!((v[0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn pencil_geometry_verbs() {
    let r = ok(&["radius", "--L", &data("disk3.json")]);
    assert!((r["result"]["rho"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let c = ok(&["cube", "--L", &data("disk3.json")]);
    assert!((c["result"]["beta"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-3);
    let e = ok(&["equal", "--L1", &data("disk3.json"), "--L2", &data("disk2.json")]);
    assert_eq!(e["result"]["equal"], false);
    let e = ok(&["equal", "--L1", &data("disk3.json"), "--L2", &data("disk3.json")]);
    assert_eq!(e["result"]["equal"], true);
    assert_eq!(e["result"]["minimal_equivalence"], true);
    let m = ok(&["minpencil", "--L", &data("disk3.json")]);
    assert_eq!(m["result"]["size"], 3);
    let u = ok(&["uniteq", "--L1", &data("disk3.json"), "--L2", &data("disk2.json")]);
    assert_eq!(u["result"]["equivalent"], false);
    let u = ok(&["uniteq", "--L1", &data("disk2.json"), "--L2", &data("disk2.json")]);
    assert_eq!(u["result"]["equivalent"], true);
    assert!(u["result"]["U"].is_array());
}
