use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degensolve")).args(args).output().expect("binary runs")
}

fn run_config(sub: &str, config: &Path, out: &Path) -> (i32, Value) {
    let o = run(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report = serde_json::from_slice(&std::fs::read(out.join("report.json")).expect("report written")).unwrap();
    (o.status.code().unwrap(), report)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn sample_configs_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    for (sub, file, csv) in [
        ("solve1d", "solve1d.json", "solution.csv"),
        ("solve2d", "solve2d.json", "solution.csv"),
        ("sweep-lambda", "sweep_lambda.json", "sweep.csv"),
        ("sweep-t", "sweep_t.json", "sweep.csv"),
        ("moving", "moving.json", "solution.csv"),
        ("nonlinear", "nonlinear.json", "trace.csv"),
        ("system", "system.json", "convergence.csv"),
    ] {
        let out = tmp.path().join(sub);
        let (code, report) = run_config(sub, &configs().join(file), &out);
        assert_eq!(code, 0, "{sub}: {report}");
        assert_eq!(report["status"], "ok");
        assert!(out.join(csv).exists(), "{sub} wrote no {csv}");
        assert!(out.join("timing.json").exists());
        assert!(report["assertions"].as_array().unwrap().iter().all(|a| a["passed"] == true));
    }
}

#[test]
fn verify_all_passes_and_writes_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_config("verify-all", &configs().join("verify_all.json"), tmp.path());
    assert_eq!(code, 0, "{report}");
    for f in ["sweep_lambda_1d.csv", "sweep_lambda_2d.csv", "sweep_t.csv", "trace.csv", "truncation.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    assert!(report["assertions"].as_array().unwrap().len() >= 20);
}

#[test]
fn unknown_key_is_a_validation_error_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(tmp.path(), "c.json", r#"{"problem": {"alfa": 1.3}}"#);
    let (code, report) = run_config("solve1d", &c, &tmp.path().join("out"));
    assert_eq!(code, 2);
    assert_eq!(report["status"], "validation_error");
    let msg = report["error"].as_str().unwrap();
    assert!(msg.contains("alfa") && msg.contains("problem"), "{msg}");
}

#[test]
fn exponent_outside_window_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(tmp.path(), "c.json", r#"{"problem": {"alpha": 0.5, "p": 4}}"#);
    let (code, report) = run_config("solve1d", &c, &tmp.path().join("out"));
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("coercivity window"), "{report}");
}

#[test]
fn minimal_config_resolves_defaults_in_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(tmp.path(), "c.json", "{}");
    let (code, report) = run_config("solve1d", &c, &tmp.path().join("out"));
    assert_eq!(code, 0, "{report}");
    let cfg = &report["config"];
    assert_eq!(cfg["mesh"]["n"], 257);
    assert_eq!(cfg["problem"]["lambda"], 1000.0);
    assert!(cfg["mesh"]["depth"].as_f64().unwrap() > 0.0);
    assert_eq!(cfg["subcommand"], "solve1d");
}

#[test]
fn negative_spectrum_point_makes_sweep_partial() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_config("sweep-lambda", &configs().join("sweep_lambda_partial.json"), tmp.path());
    assert_eq!(code, 5);
    assert_eq!(report["status"], "partial");
    let failures = report["results"]["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["index"], 2);
    assert!(failures[0]["error"].as_str().unwrap().contains("negative spectrum"));
    let csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(3).unwrap().contains(",error,"));
}

#[test]
fn divergence_is_a_solver_error_with_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_config("nonlinear", &configs().join("nonlinear_divergent.json"), tmp.path());
    assert_eq!(code, 3);
    assert_eq!(report["status"], "solver_error");
    assert!(report["error"].as_str().unwrap().contains("diverged"));
    assert!(tmp.path().join("trace.csv").exists());
}

#[test]
fn failed_assertion_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(tmp.path(), "c.json", r#"{"mesh": {"n": 65}, "assertions": {"ratio_bracket": [100, 200]}}"#);
    let (code, report) = run_config("solve1d", &c, &tmp.path().join("out"));
    assert_eq!(code, 4);
    assert_eq!(report["assertions"][0]["passed"], false);
}

#[test]
fn missing_config_still_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_config("solve1d", &tmp.path().join("nope.json"), &tmp.path().join("out"));
    assert_eq!(code, 2);
    assert!(report["config"].is_null());
    assert!(report["error"].is_string());
}

#[test]
fn subcommand_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run_config("solve1d", &configs().join("solve2d.json"), tmp.path());
    assert_eq!(code, 2);
}

#[test]
fn help_documents_exit_codes() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["Exit status", "2  validation", "3  solver", "4  assertion", "5  partial", "--threads"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(run(&["frobnicate", "--config", "x.json"]).status.code(), Some(2));
    assert_eq!(run(&["solve1d"]).status.code(), Some(2));
    assert_eq!(run(&["solve1d", "--config", "x.json", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep_lambda.json");
    let mut csvs = Vec::new();
    for k in ["1", "3"] {
        let out = tmp.path().join(k);
        let o = run(&["sweep-lambda", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", k]);
        assert_eq!(o.status.code(), Some(0));
        csvs.push((std::fs::read(out.join("sweep.csv")).unwrap(), std::fs::read(out.join("report.json")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}
