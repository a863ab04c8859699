//! The `fairsep` binary on the eight-row fixture.

use std::path::PathBuf;
use std::process::Command;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn fairsep(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fairsep"))
        .arg(args[0])
        .arg("--data")
        .arg(data("toy8.csv"))
        .arg("--schema")
        .arg(data("toy8.schema.json"))
        .args(&args[1..])
        .output()
        .unwrap()
}

#[test]
fn ground_truth_dp_violation_exits_one() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let run = fairsep(&["audit", "--notion", "DP", "--ground-truth", "--out", dir]);
    assert_eq!(run.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("report.json")).unwrap()).unwrap();
    // Female label rate 2/4 against the overall 3/8.
    assert_eq!(report["aggregate"].as_f64(), Some(0.125));
}

#[test]
fn constant_predictions_pass() {
    let out = tempfile::tempdir().unwrap();
    let preds = out.path().join("preds.csv");
    std::fs::write(&preds, "score\n1\n1\n1\n1\n1\n1\n1\n1\n").unwrap();
    let dir = out.path().join("run");
    let run = fairsep(&[
        "audit",
        "--notion",
        "DP",
        "--predictions",
        preds.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
}

#[test]
fn manifest_lists_every_file_sorted_with_checksums() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    fairsep(&["audit", "--notion", "DP", "--ground-truth", "--out", dir]);
    let bytes = std::fs::read(out.path().join("stats.csv")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    let entries = manifest["entries"].as_array().unwrap();
    let paths: Vec<&str> = entries
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert!(paths.contains(&"report.json") && paths.contains(&"stats.csv"));
    let stats = entries.iter().find(|e| e["path"] == "stats.csv").unwrap();
    assert_eq!(stats["sha256"], fairsep_cli::output::sha256_hex(&bytes));
    for e in entries {
        assert_eq!(e["sha256"].as_str().unwrap().len(), 64);
        assert_eq!(e["command"], "audit");
    }
}

#[test]
fn two_prediction_sources_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let run = fairsep(&[
        "audit",
        "--notion",
        "DP",
        "--ground-truth",
        "--model",
        "m.json",
        "--out",
        dir,
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn unknown_notion_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let run = fairsep(&["audit", "--notion", "XYZ", "--ground-truth", "--out", dir]);
    assert_eq!(run.status.code(), Some(2));
}
