use std::process::Command;

fn mmcheck() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmcheck"))
}

#[test]
fn generate_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("space.json");
    let status = mmcheck()
        .args(["generate", "--space", "zoo:star?d=3&h=0.1&l=1"])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let out = mmcheck()
        .args(["ends", "--r", "0.3", "--base", "center"])
        .arg("--space")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("count = 3"), "{text}");
}

#[test]
fn json_reports_are_deterministic() {
    let run = || {
        mmcheck()
            .args([
                "min-c",
                "--space",
                "zoo:interval?h=0.01",
                "--seed",
                "5",
                "--format",
                "json",
            ])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["version"], "1");
    assert_eq!(report["config"]["seed"], "5");
    let est = report["records"][0]["values"]["estimate"].as_f64().unwrap();
    assert!(est > 0.9 && est < 1.1, "estimate {est}");
}

#[test]
fn violation_exit_code_is_one() {
    let out = mmcheck()
        .args([
            "check-bg",
            "--space",
            "zoo:star?d=5&h=0.01&l=1",
            "--c",
            "1.0",
            "--n",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("model violation"), "{text}");
}

#[test]
fn bad_space_exit_code_is_two() {
    let out = mmcheck()
        .args(["min-c", "--space", "zoo:nonexistent_family"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn env_var_supplies_default_mesh() {
    let out = mmcheck()
        .args(["min-c", "--space", "zoo:interval", "--format", "json"])
        .env("MMCHECK_MESH", "0.02")
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["mesh"], "0.02");
}

#[test]
fn gh_between_tiny_spaces() {
    let out = mmcheck()
        .args([
            "gh",
            "--space",
            "zoo:interval?h=0.5",
            "--other",
            "zoo:interval?h=0.25",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lower = report["records"][0]["values"]["lower"].as_f64().unwrap();
    assert!(lower <= 0.13, "distance {lower}");
}

#[test]
fn theorem_suite_emits_all_eight_records() {
    let out = mmcheck()
        .args([
            "theorem-suite",
            "--space",
            "zoo:interval?h=0.01",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["key"].as_str().unwrap())
        .collect();
    assert_eq!(
        keys,
        vec![
            "degree_bound",
            "graph_degree_bound",
            "weak_branch_obstruction",
            "degree_two",
            "sphere_diameter_bound",
            "ends_bound",
            "collinearity",
            "poincare_cut_obstruction",
        ]
    );
    for r in report["records"].as_array().unwrap() {
        assert_ne!(r["detail"].as_str().unwrap(), "refuted");
    }
}
