mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture_path;

fn streampay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streampay"))
        .args(args)
        .output()
        .unwrap()
}

fn path(name: &str) -> String {
    fixture_path(name).to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_every_pipeline_fixture() {
    for p in common::pipeline_fixtures() {
        let out = streampay(&["validate", &p.to_string_lossy()]);
        assert_eq!(code(&out), 0, "{}: {}", p.display(), stdout(&out));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn validate_reports_codes() {
    let out = streampay(&["validate", &path("invalid/cycle.toml")]);
    assert_eq!(code(&out), 1);
    assert!(
        stdout(&out).starts_with("CycleDetected "),
        "{}",
        stdout(&out)
    );

    let out = streampay(&["validate", &path("invalid/duplicate_id.toml")]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).lines().any(|l| l.starts_with("DuplicateId ")));

    let out = streampay(&["validate", &path("invalid/unknown_template.toml")]);
    assert_eq!(code(&out), 1);
    assert!(
        stdout(&out).starts_with("UnknownTemplate at "),
        "{}",
        stdout(&out)
    );
}

#[test]
fn validate_missing_file() {
    let out = streampay(&["validate", "/nonexistent/spec.toml"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn run_payroll_scenario_and_write_exports() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let gas = dir.path().join("gas.txt");
    let out = streampay(&[
        "run",
        &path("payroll.toml"),
        &path("payroll.scenario.toml"),
        "--trace",
        &trace.to_string_lossy(),
        "--gas-report",
        &gas.to_string_lossy(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(&trace).unwrap(),
        std::fs::read_to_string(fixture_path("golden/payroll.trace")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(&gas).unwrap(),
        std::fs::read_to_string(fixture_path("golden/payroll.gas")).unwrap()
    );
}

#[test]
fn expected_revert_is_success() {
    let out = streampay(&[
        "run",
        &path("payroll.toml"),
        &path("unapproved.scenario.toml"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unexpected_revert_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(
        dir.path(),
        "s.toml",
        "[[action]]\ndo = \"deposit\"\nfrom = \"employer\"\namount = 900\n",
    );
    let out = streampay(&["run", &path("payroll.toml"), &script]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reverted"));
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(
        dir.path(),
        "s.toml",
        "[[action]]\ndo = \"assert\"\ncheck = \"balance\"\naccount = \"employer\"\nequals = 1\n",
    );
    let out = streampay(&["run", &path("payroll.toml"), &script]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write(dir.path(), "g.toml", "[[action]\n");
    let out = streampay(&["run", &path("payroll.toml"), &garbage]);
    assert_eq!(code(&out), 2);
    let out = streampay(&[
        "run",
        &path("invalid/cycle.toml"),
        &path("unapproved.scenario.toml"),
    ]);
    assert_eq!(code(&out), 2);
    let out = streampay(&[
        "run",
        &path("payroll.toml"),
        &path("unapproved.scenario.toml"),
        "--cost-table",
        "/nonexistent/costs.toml",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn cost_table_override_changes_gas() {
    let dir = tempfile::tempdir().unwrap();
    let costs = write(dir.path(), "costs.toml", "tx_base = 0\n");
    let gas = dir.path().join("gas.txt");
    let out = streampay(&[
        "run",
        &path("payroll.toml"),
        &path("payroll.scenario.toml"),
        "--cost-table",
        &costs,
        "--gas-report",
        &gas.to_string_lossy(),
    ]);
    assert_eq!(code(&out), 0);
    let report = std::fs::read_to_string(gas).unwrap();
    // seven transactions, each 21000 cheaper
    assert!(
        report.ends_with(&format!("total txs=7 gas={}\n", 927_900 - 7 * 21_000)),
        "{report}"
    );
}

#[test]
fn traces_are_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for i in 0..2 {
        let trace = dir.path().join(format!("t{i}"));
        let out = streampay(&[
            "run",
            &path("fatal_rollback.toml"),
            &write(
                dir.path(),
                "s.toml",
                "[[action]]\ndo = \"approve\"\nowner = \"alice\"\nspender = \"node:src\"\namount = 600\n\n\
                 [[action]]\ndo = \"deposit\"\nfrom = \"alice\"\namount = 600\n\n\
                 [[action]]\ndo = \"advance\"\nby = 30\nexpect = \"revert\"\n",
            ),
            "--trace",
            &trace.to_string_lossy(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        traces.push(std::fs::read(trace).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn bench_prints_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bench.json");
    let out = streampay(&["bench", "--json", &json.to_string_lossy()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("257,874"), "{text}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["recipients"], 3);
    assert_eq!(v["periods"], 3);
    assert!(v["gas_pipeline"].as_u64().unwrap() > v["gas_monolithic"].as_u64().unwrap());
}

#[test]
fn bench_rejects_zero_recipients() {
    let out = streampay(&["bench", "--recipients", "0"]);
    assert_eq!(code(&out), 1);
}
