use std::fs;
use std::process::{Command, Output};

fn opshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opshift")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("opshift-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn orbit_csv_of_the_doubling_lift() {
    let out = tmp("o.csv");
    let o = opshift(&[
        "orbit", "--zoo", "double_identity_lift", "--vector", "delta:5", "--steps", "6", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text, "n,norm\n0,1\n1,2\n2,4\n3,8\n4,16\n5,0\n6,0\n");
}

#[test]
fn refutation_exits_two() {
    let o = opshift(&["criterion", "--zoo", "unilateral_mixing_not_chaotic_lp", "--criterion", "chaos"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"], "Refutes");
    assert!(v["certificates"].as_array().unwrap().iter().any(|c| c["label"] == "backward.claim"));
}

#[test]
fn chaos_gap_refutes_at_horizon_ten_thousand() {
    let o = opshift(&["criterion", "--zoo", "bilateral_chaos_gap", "--criterion", "chaos", "--horizon", "10000"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"], "Refutes");
    assert_eq!(v["horizon"], 10000);
}

#[test]
fn supports_exits_zero() {
    let o = opshift(&["criterion", "--zoo", "double_identity_lift", "--criterion", "transitivity"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"], "Supports");
}

#[test]
fn flags_build_a_target() {
    let o = opshift(&[
        "criterion", "--zoo", "double_identity_lift", "--criterion", "transitivity", "--horizon", "10", "--vector",
        "delta:", "--radius", "1/2", "--index", "1",
    ]);
    // `delta:` with an empty address is the scalar coordinate of X_1
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"], "Supports");
}

#[test]
fn request_file_runs_chaos_on_a_config() {
    let cfg = tmp("double.json");
    fs::write(
        &cfg,
        r#"{"index_set": "N", "norm": {"kind": "lp", "p": "1"},
            "family": {"kind": "scalar_weights", "tail": "2"}}"#,
    )
    .unwrap();
    let req = tmp("req.json");
    fs::write(
        &req,
        r#"{"criterion": "chaos", "horizon": 50, "vector": "delta:1",
            "claims": {"backward": {"kind": "geometric", "c": "1", "r": "1/2", "n0": 0}}}"#,
    )
    .unwrap();
    let o = opshift(&["criterion", "--config", cfg.to_str().unwrap(), "--request", req.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["state"], "Supports");
}

#[test]
fn malformed_config_reports_line_and_field() {
    let bad = tmp("bad.json");
    fs::write(&bad, "{\n  \"index_set\": \"N\",\n  \"norm\": {\"kind\": \"lp\", \"p\": \"1\"}\n  \"family\": {}\n}").unwrap();
    let o = opshift(&["orbit", "--config", bad.to_str().unwrap(), "--vector", "delta:1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let unknown = tmp("unknown.json");
    fs::write(
        &unknown,
        r#"{"index_set": "N", "norm": {"kind": "lp", "p": "1"}, "family": {"kind": "scalar_weights", "tail": "2", "tial": "3"}}"#,
    )
    .unwrap();
    let o = opshift(&["orbit", "--config", unknown.to_str().unwrap(), "--vector", "delta:1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("$.family") && err.contains("tial"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(opshift(&["orbit"]).status.code(), Some(1));
    assert_eq!(opshift(&["zoo", "run", "no_such_entry"]).status.code(), Some(1));
    assert_eq!(opshift(&["zoo", "run", "--all", "--budget", "0"]).status.code(), Some(1));
    assert_eq!(
        opshift(&["criterion", "--zoo", "proptree", "--criterion", "chaos", "--horizon", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn zoo_run_all_matches_and_is_deterministic() {
    let a = opshift(&["zoo", "run", "--all", "--budget", "default"]);
    assert_eq!(a.status.code(), Some(0));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
    let ids: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), 8);
    let b = opshift(&["zoo", "run", "--all", "--parallel"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn small_budget_skips_but_still_matches() {
    let o = opshift(&["zoo", "run", "proptree", "--budget", "10", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v[0]["diagnostics"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["skipped"] == true && r["verdict"]["state"] == "Indeterminate"));
}

#[test]
fn export_reloads_through_config() {
    let path = tmp("gap.json");
    let o = opshift(&["zoo", "export", "bilateral_chaos_gap", "--side", "base", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a = opshift(&["orbit", "--config", path.to_str().unwrap(), "--vector", "delta:-3", "--steps", "8"]);
    let b = opshift(&["orbit", "--zoo", "bilateral_chaos_gap", "--side", "base", "--vector", "delta:-3", "--steps", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn report_has_no_violations() {
    let o = opshift(&["report"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["implication_violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["entries"].as_array().unwrap().len(), 8);
}
