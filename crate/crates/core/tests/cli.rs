use std::path::Path;
use std::process::Command;

use lietrans::io::{read_json, read_matrix_csv};

fn lietrans(args: &[&str]) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_lietrans")).args(args).status().unwrap().code()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope");
    assert_eq!(lietrans(&["learn", "--data", path(&missing), "--out", path(&out)]), Some(2));
}

#[test]
fn ragged_csv_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("base.csv"), "1,2\n3\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(lietrans(&["learn", "--data", path(dir.path()), "--out", path(&out)]), Some(2));
}

#[test]
fn degenerate_points_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("base.csv"), "0,0\n0,0\n0,0\n").unwrap();
    std::fs::write(dir.path().join("neighbor.csv"), "0.1,0\n0,0.1\n0.1,0.1\n").unwrap();
    let out = dir.path().join("out");
    let code = lietrans(&["learn", "--data", path(dir.path()), "--method", "convex", "--out", path(&out)]);
    assert_eq!(code, Some(3));
}

#[test]
fn generate_learn_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"kind": "rotation2d", "K": 1, "n": 30, "seed": 4}"#).unwrap();
    let data = dir.path().join("data");
    let est = dir.path().join("est");
    let report = dir.path().join("report.json");
    assert_eq!(lietrans(&["gen", "--config", path(&spec), "--out", path(&data)]), Some(0));
    let base = read_matrix_csv(&data.join("base.csv")).unwrap();
    assert_eq!(base.shape(), (30, 2));

    let code = lietrans(&[
        "learn", "--data", path(&data), "--method", "convex+gradient", "--k", "1", "--lambda", "1e-4",
        "--out", path(&est),
    ]);
    assert_eq!(code, Some(0));
    assert!(est.join("generator_1.csv").exists());
    assert!(est.join("manifest.json").exists());

    let code = lietrans(&["eval", "--est", path(&est), "--truth", path(&data), "--out", path(&report)]);
    assert_eq!(code, Some(0));
    let json: serde_json::Value = read_json(&report).unwrap();
    let total = json["total"].as_f64().unwrap();
    assert!(total < 1e-2, "rotation recovered with error {total}");
}
