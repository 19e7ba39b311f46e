use std::process::Command;

use tddi::cli::{run_cli, EXIT_CONFIG, EXIT_OK, INDICES_CSV_HEADER};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["tddi"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn run_fc1_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, stderr) = run(&["run", "--case", "case9", "--feeder", "fc1", "--replicas", "10", "--attach-bus", "5", "--out", out]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("distribution_limited"), "{stdout}");
    for f in ["trace.csv", "indices.csv", "summary.json", "snapshots-D2-feeder1.csv", "snapshots-D3-feeder1.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let indices = std::fs::read_to_string(dir.path().join("indices.csv")).unwrap();
    assert!(indices.starts_with(INDICES_CSV_HEADER));
    assert!(indices.lines().skip(1).all(|l| l.starts_with("fc1,D")));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["classification"], "distribution_limited");
    assert_eq!(summary["critical_bus"], "D3-feeder1");
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| e.unwrap().path().extension().unwrap() != "tmp"));
}

#[test]
fn run_standard_has_empty_indices() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run(&["run", "--case", "case9", "--out", dir.path().to_str().unwrap(), "--json"]);
    assert_eq!(code, EXIT_OK);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let margin = summary["margin_mw"].as_f64().unwrap();
    assert!((margin - 467.5).abs() < 46.75);
    assert!(summary["classification"].is_null());
    let indices = std::fs::read_to_string(dir.path().join("indices.csv")).unwrap();
    assert_eq!(indices, format!("{INDICES_CSV_HEADER}\n"));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().starts_with("0,315.000000,1,1.00000000,"));
}

#[test]
fn table1_prints_three_rows() {
    let (code, stdout, _) = run(&["table1"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("Standard"));
    assert!(lines[2].starts_with("FC1") && lines[2].contains("distribution_limited"));
    assert!(lines[3].starts_with("FC2") && lines[3].contains("transmission_limited"));
}

#[test]
fn table1_json_subset() {
    let (code, stdout, _) = run(&["table1", "--scenario", "fc2", "--json"]);
    assert_eq!(code, EXIT_OK);
    let rows: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["scenario"], "fc2");
    assert_eq!(rows[0]["classification"], "transmission_limited");
    assert!(rows[0]["nose_v_bus5"].as_f64().unwrap() > 0.5);
}

#[test]
fn unknown_flag_and_bad_values() {
    assert_eq!(run(&["run", "--frobnicate"]).0, EXIT_CONFIG);
    assert_eq!(run(&["run", "--estimator", "kalman"]).0, EXIT_CONFIG);
    assert_eq!(run(&["table1", "--scenario", "fc9"]).0, EXIT_CONFIG);
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("table1"));
}

#[test]
fn binary_exit_codes_and_data_dir_override() {
    let exe = env!("CARGO_BIN_EXE_tddi");
    let status = Command::new(exe).args(["run", "--nope"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&status.stderr).contains("--nope"));

    // a data dir whose fc1 is the fc2 feeder must change the answer
    let data = tempfile::tempdir().unwrap();
    let bundled = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::copy(bundled.join("case9.json"), data.path().join("case9.json")).unwrap();
    std::fs::copy(bundled.join("fc2.feeder"), data.path().join("fc1.feeder")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let res = Command::new(exe)
        .args(["run", "--feeder", "fc1", "--json", "--out"])
        .arg(out.path())
        .env("TDDI_DATA_DIR", data.path())
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["classification"], "transmission_limited");

    let empty = tempfile::tempdir().unwrap();
    let res = Command::new(exe)
        .args(["run", "--out"])
        .arg(out.path())
        .env("TDDI_DATA_DIR", empty.path())
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
}
