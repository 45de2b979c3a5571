use std::fs;
use std::process::{Command, Output};

fn netcode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcode")).args(args).output().expect("spawn netcode")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn design_three_sources_distance_three() {
    let o = netcode(&["design", "--k", "3", "--d", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 6);
    assert_eq!(v["sep"], serde_json::json!([3, 3, 3]));
}

#[test]
fn design_by_length_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("code.json");
    let o = netcode(&["design", "--n", "7", "--d", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["k"], 4);
    assert_eq!(v["sep"], serde_json::json!([3, 3, 3, 3]));
}

#[test]
fn analyze_rate_three_fifths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("code.json");
    fs::write(&path, r#"{"k":3,"n":5,"G":[[1,0,0,1,1],[0,1,0,0,1],[0,0,1,1,0]],"v":[1,2,3,1,2]}"#).unwrap();
    let o = netcode(&["analyze", "--json", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sep"], serde_json::json!([3, 2, 2]));
    assert_eq!(v["rate"], 0.6);
    assert_eq!(v["schedule_valid"], true);
    let text = stdout(&netcode(&["analyze", path.to_str().unwrap()]));
    assert!(text.contains("rate = 3/5"));
}

#[test]
fn missing_config_exits_two() {
    let o = netcode(&["simulate", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not/here.json"));
}

#[test]
fn unknown_config_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"code":{"design":{"k":3,"d":3}},"snr_grid":[1]}"#).unwrap();
    let o = netcode(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_then_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let csv = dir.path().join("out.csv");
    let trace = dir.path().join("trace.jsonl");
    fs::write(
        &cfg,
        r#"{"code":{"design":{"k":3,"d":3}},"snr_grid_db":[0,4],"min_errors_per_bit":20,"max_trials":50000,"master_seed":7}"#,
    )
    .unwrap();
    let args = ["simulate", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()];
    let o = netcode(&[&args[..], &["--trace", trace.to_str().unwrap(), "--trace-rounds", "3"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "snr_db,source,trials,errors,ber,stderr,flags");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 6);

    // same seed, same bytes
    let again = dir.path().join("again.csv");
    assert!(netcode(&["simulate", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(body, fs::read_to_string(&again).unwrap());

    let o = netcode(&["slope", csv.to_str().unwrap(), "--window", "2", "--min-errors", "10", "--source", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("u2: slope "));
}

#[test]
fn tradeoff_table() {
    let o = netcode(&["tradeoff", "--k", "3", "--n-max", "8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("k,n,rate,"));
    assert_eq!(rows.len(), 1 + 6);
    assert!(rows[4].starts_with("3,6,"));
    let o = netcode(&["tradeoff", "--d", "3", "--k-max", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 3);
}

#[test]
fn usage_error_exits_two() {
    assert_eq!(netcode(&["design", "--d", "3"]).status.code(), Some(2));
}
