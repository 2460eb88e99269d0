use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios").join(name)
}

fn run(cmd: &str, scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lie-ensemble"))
        .args([cmd, "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .env_remove("LIE_ENSEMBLE_OUT")
        .output()
        .unwrap()
}

#[test]
fn verify_writes_a_passing_versioned_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let res = run("verify", &scenario("verify_so3.toml"), &out);
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["command"], "verify");
    assert_eq!(report["pass"], true);
    assert!(!report["verdicts"].as_array().unwrap().is_empty());
}

#[test]
fn mismatched_subcommand_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let res = run("closure", &scenario("verify_so3.toml"), &out);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failing_verdict_still_writes_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let res = run("verify", &scenario("fail_single_generator.toml"), &out);
    assert_eq!(res.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(String::from_utf8(res.stdout).unwrap().contains("FAIL "));
}

#[test]
fn missing_scenario_file_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run("verify", &tmp.path().join("nope.toml"), &tmp.path().join("o"));
    assert_eq!(res.status.code(), Some(2));
}
