//! Smoke tests for the sgmap binary.

use std::fs;
use std::process::Command;

fn sgmap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sgmap"))
}

#[test]
fn estimate_subcommand_round_trip() {
    let dir = std::env::temp_dir().join(format!("sgmap-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let data_path = dir.join("data.csv");
    fs::write(
        &data_path,
        "n=3 sigma=1\n5.0,0.1,-0.2\n0.05,-0.1,0.2\n",
    )
    .unwrap();
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        r#"{
            "gamma": 4.0,
            "sigma": 1.0,
            "between_prior": {"kind": "binomial", "K": 2, "xi": 0.5},
            "within_priors": {"kind": "binomial", "K": 3, "xi": 0.3}
        }"#,
    )
    .unwrap();
    let out = sgmap()
        .args(["estimate", "--data"])
        .arg(&data_path)
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["m0_hat"], 1);
    assert_eq!(report["selected"], serde_json::json!([0]));
    let estimate = report["estimate"].as_array().unwrap();
    assert_eq!(estimate[0][0], 5.0);
    assert_eq!(estimate[1], serde_json::json!([0.0, 0.0, 0.0]));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn table3_csv_round_trips() {
    let out = sgmap()
        .args(["table3", "--reps", "100", "--seed", "5", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let reports = sparse_group_map::sim::reports_from_csv(&text).unwrap();
    assert_eq!(reports.len(), 12);
    assert_eq!(sparse_group_map::sim::reports_to_csv(&reports), text);
}

#[test]
fn simulate_matches_library_run() {
    let dir = std::env::temp_dir().join(format!("sgmap-sim-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let scenario_path = dir.join("scenario.json");
    fs::write(
        &scenario_path,
        r#"{"m":4,"n":10,"nonzero_counts":[0,0,5,10],"tau":3.0,"sigma":1.0,
            "replications":50,"seed":11,"resample_signal":true}"#,
    )
    .unwrap();
    let estimator_path = dir.join("estimator.json");
    fs::write(&estimator_path, r#"{"kind":"map-binomial"}"#).unwrap();
    let out = sgmap()
        .args(["simulate", "--scenario"])
        .arg(&scenario_path)
        .arg("--estimator")
        .arg(&estimator_path)
        .args(["--gamma", "9.0", "--format", "json", "--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: sparse_group_map::sim::MSEReport = serde_json::from_slice(&out.stdout).unwrap();

    let scenario: sparse_group_map::SimScenario64 =
        serde_json::from_str(&fs::read_to_string(&scenario_path).unwrap()).unwrap();
    let expected = sparse_group_map::run_mse(
        &scenario,
        &sparse_group_map::sim::EstimatorSpec::MapBinomial,
        9.0,
    )
    .unwrap();
    assert_eq!(report.mse, expected.mse);
    assert_eq!(report.standard_error, expected.standard_error);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rejects_bad_input() {
    let out = sgmap().args(["estimate", "--data", "/nonexistent", "--config", "/nonexistent"]).output().unwrap();
    assert!(!out.status.success());
}
