use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nested-control"))
}

#[test]
fn lists_scenarios() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("rec-eird")));
    assert_eq!(text.lines().count(), nested_control::harness::SCENARIOS.len());
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario":"example-d1","controller":"oen_ftrl","horizon":200,"seeds":[1,2]}"#).unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--seed").arg("5").arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("example-d1_oen_ftrl_seed5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("example-d1_oen_ftrl_seed5.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 5);
    assert!(!dir.path().join("example-d1_oen_ftrl_seed1.csv").exists());
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario":"prop2","controller":"state_targeting","horizon":20}"#).unwrap();
    let out_dir = dir.path().join("from-env");
    let out = bin().args(["run", "--config"]).arg(&cfg).env(nested_control::harness::OUTPUT_ENV, &out_dir).output().unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("prop2_state_targeting_seed0.csv").exists());
}

#[test]
fn bad_config_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario":"prop2","controller":"oen_ftrl","horizon":20,"colour":1}"#).unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn accept_exit_code_reflects_the_filtered_checks() {
    let out = bin().args(["accept", "--filter", "pricing"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(out.status.success(), text.starts_with("PASS"));
}
