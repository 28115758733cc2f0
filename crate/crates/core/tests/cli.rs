use std::io::Write;
use std::process::{Command, Output, Stdio};

use recipbp::io::model_to_json;
use recipbp::model::random_model;
use recipbp::HiddenReciprocalModel;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_recipbp"));
    for var in ["RECIPBP_TOL", "RECIPBP_T_MAX", "RECIPBP_SEED", "RECIPBP_INIT", "RECIPBP_CSV", "RECIPBP_CAP", "RECIPBP_NODE", "RECIPBP_OUTPUT"] {
        c.env_remove(var);
    }
    c
}

fn model_file(m: &HiddenReciprocalModel) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(model_to_json(m).as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn smooth_uniform_loop() {
    let f = model_file(&HiddenReciprocalModel::uniform(2, 4).unwrap());
    let out = run(&["smooth", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for b in v["beliefs"].as_array().unwrap() {
        assert_eq!(b, &serde_json::json!([0.5, 0.5]));
    }
}

#[test]
fn stdin_input_matches_file_input() {
    let m = random_model(3, 5, 11, 0.0).unwrap();
    let f = model_file(&m);
    let from_file = run(&["smooth", f.path().to_str().unwrap()]);
    let mut child = bin()
        .args(["smooth", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(model_to_json(&m).as_bytes()).unwrap();
    let from_stdin = child.wait_with_output().unwrap();
    assert_eq!(from_stdin.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_stdin.stdout);
}

#[test]
fn outputs_are_byte_identical() {
    let f = model_file(&random_model(2, 6, 21, 0.0).unwrap());
    let p = f.path().to_str().unwrap();
    for args in [
        vec!["smooth", p, "--init", "random", "--seed", "5"],
        vec!["compare", p],
        vec!["diagnose", p],
        vec!["sample", p, "-n", "200", "--seed", "3"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn cap_exceeded_exits_two_with_transfer_marginals() {
    let f = model_file(&HiddenReciprocalModel::uniform(4, 20).unwrap());
    let out = run(&["exact", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["transfer"].as_array().unwrap().len(), 20);
    assert!(v["bruteforce"].is_null());
}

#[test]
fn env_overrides_flags() {
    let f = model_file(&HiddenReciprocalModel::uniform(2, 20).unwrap());
    let out = bin().args(["exact", f.path().to_str().unwrap()]).env("RECIPBP_CAP", "16").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["exact", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn error_bodies_are_json_on_stderr() {
    let out = run(&["smooth", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["smooth"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_flag_writes_file() {
    let f = model_file(&random_model(2, 4, 2, 0.0).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("beliefs.csv");
    let out = run(&["smooth", f.path().to_str().unwrap(), "--csv", "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert!(text.starts_with("node,p0,p1\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn emitted_floats_round_trip() {
    let m = random_model(3, 4, 8, 0.0).unwrap();
    let f = model_file(&m);
    let v = json(&run(&["exact", f.path().to_str().unwrap()]));
    let exact = recipbp::exact::exact_marginals_transfer(&m).unwrap();
    for (k, row) in v["transfer"].as_array().unwrap().iter().enumerate() {
        for (x, cell) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(cell.as_f64().unwrap().to_bits(), exact.get(k)[x].to_bits());
        }
    }
}

#[test]
fn gaussian_sampling_csv() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let b = recipbp::gaussian::SecondOrderBlocks::scalar_stationary(4, 2.0, 0.5).unwrap();
    f.write_all(recipbp::io::blocks_to_json(&b).as_bytes()).unwrap();
    let out = run(&["gauss", "sample", f.path().to_str().unwrap(), "-n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text.lines().next(), Some("x0,x1,x2,x3"));
}
