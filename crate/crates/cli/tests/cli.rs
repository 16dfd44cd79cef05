//! End-to-end runs of the `synpor` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use synpor::frontend::{closely_coupled, parse, render};

fn synpor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synpor")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn verify_coupled_with_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    let cc = write(dir.path(), "cc.ctp", &render(&closely_coupled(false)));
    let out = synpor(&["verify", cc.to_str().unwrap(), "--mode", "si", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "SAFE");
    assert_eq!(r["states_visited"], 9);
    assert_eq!(r["states_subsumed"], 4);
    assert!(r.get("counterexample").is_none());
}

#[test]
fn generated_sum_program_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sum6.ctp");
    let out = synpor(&["gen", "sum", "6", "-o", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let p = parse(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(p.processes.len(), 6);
    let out = synpor(&["verify", file.to_str().unwrap(), "--mode", "pdpor-si", "--json"]);
    assert_eq!(json(&out)["states_visited"], 7);
}

#[test]
fn gen_to_stdout_and_bad_sizes() {
    let out = synpor(&["gen", "pc", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(parse(&stdout(&out)).unwrap().processes.len(), 5);
    let out = synpor(&["gen", "phil", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n >= 2"));
    assert_ne!(synpor(&["gen", "bakery", "2"]).status.code(), Some(0));
}

#[test]
fn unsafe_program_reports_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = closely_coupled(false);
    p.property = synpor::frontend::parse_property("x <= 7").unwrap();
    let bad = write(dir.path(), "bad.ctp", &render(&p));
    let out = synpor(&["verify", bad.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["verdict"], "UNSAFE");
    let trace: Vec<synpor::model::TransId> = serde_json::from_value(r["counterexample"]["trace"].clone()).unwrap();
    let witness = serde_json::from_value(r["counterexample"]["witness"].clone()).unwrap();
    assert_eq!(p.replay(&trace, &witness), Ok(true));

    let human = synpor(&["verify", bad.to_str().unwrap(), "--mode", "exhaustive"]);
    assert_eq!(human.status.code(), Some(1));
    assert!(stdout(&human).contains("verdict: UNSAFE"));
    assert!(stdout(&human).contains("counterexample: ["));
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.ctp", "shared x = 0\nprocess P {\n  0 -> 1 : x := ;\n}\n");
    let out = synpor(&["verify", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("3:"), "{}", stderr(&out));

    let missing = synpor(&["verify", dir.path().join("none.ctp").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let cc = write(dir.path(), "cc.ctp", &render(&closely_coupled(false)));
    let order = synpor(&["verify", cc.to_str().unwrap(), "--seed-order", "P1,P1"]);
    assert_eq!(order.status.code(), Some(2));
    let budget = synpor(&["verify", cc.to_str().unwrap(), "--solver-budget", "1", "--json"]);
    assert_eq!(budget.status.code(), Some(2));
    assert_eq!(json(&budget)["verdict"], "RESOURCE_LIMIT");
}

#[test]
fn dump_persistent_goes_to_stderr_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cc = write(dir.path(), "cc.ctp", &render(&closely_coupled(true)));
    let out = synpor(&["verify", cc.to_str().unwrap(), "--dump-persistent", "--json", "--seed-order", "reverse"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "SAFE");
    assert!(stderr(&out).starts_with("(0,0) -> {"), "{}", stderr(&out));
    let plain = synpor(&["verify", cc.to_str().unwrap(), "--dump-persistent"]);
    assert!(stdout(&plain).contains("(0,0) -> {"));
}

#[test]
fn bench_rows_and_timeouts() {
    let out = synpor(&["bench", "--families", "sum", "--sizes", "6,8", "--modes", "pdpor-si"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["family", "n", "mode", "verdict", "states", "subsumed", "traces", "time_ms"]
    );
    let states: Vec<String> = rows.records().map(|r| r.unwrap()[4].to_string()).collect();
    assert_eq!(states, ["7", "9"]);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.csv");
    let out = synpor(&[
        "bench", "--families", "pc", "--sizes", "2", "--modes", "exhaustive", "--timeout", "0", "-o",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&file).unwrap();
    assert!(written.lines().nth(1).unwrap().ends_with("RESOURCE_LIMIT,-,-,-,-"), "{written}");

    let empty = synpor(&["bench", "--modes", ""]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(stderr(&empty).contains("empty mode list"));
}
