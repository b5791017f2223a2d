//! End-to-end tests of the `qet` binary: exit codes, output files, the JSON
//! schema and reproducibility.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn qet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qet"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("QET_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn assert_schema_valid(doc: &Value) {
    let schema: Value = serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn error_kind(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let doc: Value = serde_json::from_str(line.trim()).unwrap();
    doc["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn estimate_writes_a_schema_valid_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qet(&["estimate"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&tmp.path().join("estimate.json"));
    assert_schema_valid(&doc);
    let q = &doc["result"]["quantities"];
    let dv = q["delta_v"]["si"].as_f64().unwrap();
    assert!((dv - 1.026_923e-5).abs() < 1e-10);
    let e_a = q["e_a"]["ev"].as_f64().unwrap();
    assert!((e_a - 5.5674e-3).abs() < 1e-6);
    let e_b = q["e_b_quadrature"]["ev"].as_f64().unwrap();
    assert!((e_b - 14.809_34e-6).abs() < 1e-10);
}

#[test]
fn resolved_config_echo_reloads_to_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[physical]\nR = \"25 kOhm\"\nL = \"30 um\"\n");
    assert_eq!(qet(&["estimate", "--config", &cfg], tmp.path()).status.code(), Some(0));
    let first = read_json(&tmp.path().join("estimate.json"));
    let echo = tmp.path().join("echo.toml");
    std::fs::write(&echo, first["resolved_config_toml"].as_str().unwrap()).unwrap();
    let again_dir = tmp.path().join("again");
    assert_eq!(qet(&["estimate", "--config", echo.to_str().unwrap()], &again_dir).status.code(), Some(0));
    let second = read_json(&again_dir.join("estimate.json"));
    assert_eq!(first["result"], second["result"]);
    assert_eq!(first["resolved_config"]["physical"], second["resolved_config"]["physical"]);
}

#[test]
fn scan_csv_is_rfc4180_with_a_fit_footer() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qet(&["scan"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(tmp.path().join("scan.csv")).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(text.ends_with("\r\n"));
    assert_eq!(text.matches("\r\n").count(), text.matches('\n').count());
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["L_over_l", "E_B_quadrature_eV", "E_B_quadrature_err_eV", "E_B_order_eV", "evals", "status"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for r in &rows[..9] {
        assert_eq!(&r[5], "ok");
        assert!(r[1].parse::<f64>().unwrap() > 0.0);
    }
    let footer = &rows[9];
    assert_eq!(&footer[0], "fit_slope");
    let slope: f64 = footer[1].parse().unwrap();
    assert!((slope + 5.0).abs() < 0.3);
    assert_eq!(&footer[4], "8");
    assert_schema_valid(&read_json(&tmp.path().join("scan.json")));
}

#[test]
fn single_distance_scan_has_no_footer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scan]\ndistances_l = [3.0]\n");
    assert_eq!(qet(&["scan", "--config", &cfg], tmp.path()).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(tmp.path().join("scan.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "3");
    assert_eq!(&rows[0][5], "ok");
    let doc = read_json(&tmp.path().join("scan.json"));
    assert_schema_valid(&doc);
    assert!(doc["result"]["table"]["fit"].is_null());
}

#[test]
fn mc_reports_validate_and_repeat_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["mc", "--engine", "both", "--eta", "5e-4", "--shots", "2000", "--seed", "5"];
    assert_eq!(qet(&args, tmp.path()).status.code(), Some(0));
    let first = std::fs::read(tmp.path().join("mc.json")).unwrap();
    let doc: Value = serde_json::from_slice(&first).unwrap();
    assert_schema_valid(&doc);
    let reports = &doc["result"]["reports"];
    assert!(reports["analytic"]["e_b"]["mean_ev"].as_f64().unwrap() > 0.0);
    assert!(reports["oracle"]["e_b"]["mean_ev"].as_f64().unwrap() > 0.0);
    assert_eq!(reports["oracle"]["perturbative"], true);
    assert!(reports["analytic"]["perturbative"].is_null());
    assert_eq!(doc["seed"], 5);
    assert_eq!(qet(&args, tmp.path()).status.code(), Some(0));
    assert_eq!(first, std::fs::read(tmp.path().join("mc.json")).unwrap());
}

#[test]
fn full_coupling_is_flagged_non_perturbative() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[oracle]\nbox_length_l = 32\nn_modes = 512\n");
    let out = qet(&["mc", "--config", &cfg, "--engine", "oracle", "--eta", "1", "--shots", "500"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&tmp.path().join("mc.json"));
    assert_schema_valid(&doc);
    assert_eq!(doc["result"]["reports"]["oracle"]["perturbative"], false);
    assert!(doc["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("non-perturbative")));
}

#[test]
fn control_arm_flag_reaches_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qet(&["mc", "--arm", "control", "--shots", "500"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&tmp.path().join("mc.json"));
    assert_schema_valid(&doc);
    assert_eq!(doc["result"]["reports"]["analytic"]["arm"], "control");
    assert!(doc["result"]["reports"]["oracle"].is_null());
    assert_eq!(doc["resolved_config"]["experiment"]["shots"], 500);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        "[physical]\nunknown_key = 1\n",
        "[physical]\nR = \"10\"\n",
        "[physical]\nR = \"10 kV\"\n",
        "[physical]\nC = \"-1 fF\"\n",
        "not toml at all [",
        "[experiment]\nengine = \"quantum\"\n",
    ];
    for body in cases {
        let cfg = write_config(tmp.path(), body);
        let out = qet(&["estimate", "--config", &cfg], tmp.path());
        assert_eq!(out.status.code(), Some(2), "config {body:?}");
        assert_eq!(error_kind(&out), "config", "config {body:?}");
    }
    let out = qet(&["mc", "--eta", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qet(&["mc", "--threads", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qet(&["mc", "--engine", "nope"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let missing = tmp.path().join("missing.toml");
    let out = qet(&["estimate", "--config", missing.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("estimate.json").exists());
}

#[test]
fn invalid_thread_environment_is_a_config_error_unless_overridden() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qet"));
        c.args(["estimate", "--out"]).arg(tmp.path()).env("QET_THREADS", "lots");
        if let Some(f) = flag {
            c.args(["--threads", f]);
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(run(None), Some(2));
    assert_eq!(run(Some("2")), Some(0));
}

#[test]
fn check_passes_and_detects_an_injected_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = qet(&["check"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8_lossy(&ok.stdout);
    for suite in ["units", "field", "gaussian_engine", "detector", "feedback", "coupling", "protocol"] {
        assert!(text.contains(&format!("[PASS] {suite}")), "{suite} missing from\n{text}");
    }
    let bad = qet(&["check", "--inject-fault", "constants"], tmp.path());
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8_lossy(&bad.stdout);
    let failing = text.lines().find(|l| l.starts_with("failing properties:")).unwrap();
    assert!(failing.contains("units::delta_v_reference"), "{failing}");
    assert!(text.contains("[FAIL] units"));
    let unknown = qet(&["check", "--inject-fault", "gravity"], tmp.path());
    assert_eq!(unknown.status.code(), Some(2));
}
