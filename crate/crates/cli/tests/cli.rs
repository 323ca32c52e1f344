//! End-to-end tests of the `crn` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn crn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crn")).args(args).env("CRN_WORKERS", "1").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crn-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn errors_are_json_with_exit_status_one() {
    let out = crn(&["check", "--protocol", "no-such-protocol", "--n", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("JSON on stderr");
    assert_eq!(err["error"]["kind"], "unknown_protocol");
    assert!(err["message"].as_str().unwrap().contains("no-such-protocol"));
}

#[test]
fn random_walk_broadcast_check_reports_a_lasso() {
    let v = stdout_json(&crn(&["check", "--protocol", "random-walk-broadcast", "--init", "P_1 + F_0 + F_1"]));
    assert_eq!(v["weakly_correct"], false);
    assert_eq!(v["strongly_correct"], true);
    let lasso = &v["results"][0]["weak"]["witness"]["lasso"];
    assert!(lasso["cycle"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn check_up_to_agrees_with_expectations() {
    let v = stdout_json(&crn(&["check", "--protocol", "kill-b", "--up-to", "6"]));
    assert_eq!(v["weakly_correct"], true);
    for row in v["results"].as_array().unwrap() {
        assert_eq!(row["weak"]["correct"], row["expected_weak"]);
    }
}

#[test]
fn compiled_predicate_file_checks() {
    let path = scratch("below_one.crn");
    let out = crn(&["compile", "thr(X < 1)", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for input in ["0", "1", "3"] {
        let v = stdout_json(&crn(&["check", "--file", path.to_str().unwrap(), "--input", input, "--fuel", "2"]));
        assert_eq!(v["weakly_correct"], true, "input {input}");
    }
}

#[test]
fn compile_lists_the_registry() {
    let out = crn(&["compile", "--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in crn_core::registry_names() {
        assert!(text.lines().any(|l| l.trim() == name), "{name}");
    }
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let args = ["simulate", "--protocol", "kill-b", "--init", "A + B + 5 X + 5 X'", "--seed", "42"];
    let a = crn(&args);
    let b = crn(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = crn(&["simulate", "--protocol", "kill-b", "--init", "A + B + 5 X + 5 X'", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn runtime_writes_rounds_and_summary() {
    let summary = scratch("summary.json");
    let out = crn(&[
        "runtime",
        "--protocol",
        "round-inflation",
        "--init",
        "L_0 + 3 X + 4 Y",
        "--scheduler",
        "scripted",
        "--adversary",
        "alternating",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("round,t,t_e,end,q_size,targets,accomplished,tc_time_units,cumulative_rt_time_units"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(v["rt_time_units"].as_f64().unwrap() > 0.0);
    assert_eq!(v["rounds"].as_u64().unwrap() as usize, csv.lines().count() - 1);
}

#[test]
fn sweep_on_detection_writes_one_row_per_size() {
    let out = crn(&["sweep", "--protocol", "detection", "--n-min", "16", "--n-max", "64", "--trials", "3", "--tc-trials", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,rt_stab_time_units,rt_halt_time_units,stochastic_runtime_time_units,mean_steps,trials");
    let ns: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["16", "32", "64"]);
}

#[test]
fn config_file_supplies_flags() {
    let cfg = scratch("pitfalls.conf");
    std::fs::write(&cfg, "protocol = skipping-policy\nn = 8\ns = 2\n").unwrap();
    let v = stdout_json(&crn(&["pitfalls", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["pitfall_count"], 3);
}

#[test]
fn digraph_dot_output_is_a_graph() {
    let out = crn(&["digraph", "--protocol", "kill-b", "--init", "A + B + X", "--format", "dot"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
}
