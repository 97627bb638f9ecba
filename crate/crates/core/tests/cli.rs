use std::process::{Command, Output};

use serde_json::Value;

fn rgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg")).args(args).env_remove("RGG_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim_end()).unwrap()
}

#[test]
fn bounds_hits_target_mean() {
    let r = json(&rgg(&["bounds", "-d", "2", "--delta", "0.05", "--theta", "1", "--solve-lambda"]));
    assert!((r["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(r["log_domain"], false);
    assert!(r["tv_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn zero_intensity_zeroes_gammas() {
    let r = json(&rgg(&["bounds", "-d", "3", "--delta", "0.2", "--lambda", "0", "--theta", "1"]));
    for key in ["gamma1", "gamma2", "gamma3p", "gamma3n"] {
        assert_eq!(r[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn high_dimension_report_is_finite() {
    let r = json(&rgg(&["bounds", "-d", "100", "--delta", "0.01", "--theta", "1", "--solve-lambda", "--log-domain"]));
    assert_eq!(r["log_domain"], true);
    for key in ["mean", "gamma2", "gamma3p", "gamma3n", "tv_bound", "log_lambda", "log_gamma1"] {
        assert!(r[key].as_f64().is_some_and(f64::is_finite), "{key} = {}", r[key]);
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = rgg(&["bounds", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}

#[test]
fn invalid_parameter_exits_two() {
    let out = rgg(&["bounds", "-d", "2", "--delta", "-0.1", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("delta"));
}

#[test]
fn infeasible_simulation_exits_three() {
    let out = rgg(&["simulate", "-d", "10", "--delta", "0.01", "--theta", "1", "--solve-lambda", "--replicates", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "infeasible");
}

#[test]
fn solve_lambda_round_trips() {
    let r = json(&rgg(&["solve-lambda", "-d", "50", "--delta", "0.02", "--theta", "1"]));
    let (lambda, log_lambda) = (r["lambda"].as_f64().unwrap(), r["log_lambda"].as_f64().unwrap());
    assert!(((lambda.ln() - log_lambda) / log_lambda).abs() < 1e-12);
    let b = json(&rgg(&["bounds", "-d", "50", "--delta", "0.02", "--log-lambda", &log_lambda.to_string()]));
    assert!((b["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn simulate_appends_jsonl_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let args = |workers: &'static str| {
        [
            "simulate", "-d", "2", "--delta", "0.1", "--theta", "1", "--solve-lambda", "--replicates", "300", "--seed",
            "9", "--workers", workers, "--bootstrap-resamples", "50", "--output", path.to_str().unwrap(),
        ]
        .map(String::from)
    };
    for workers in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_rgg")).args(args(workers)).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["seed"], 9);
    for key in ["emp_mean", "emp_var", "emp_tv", "distribution"] {
        assert_eq!(lines[0][key], lines[1][key], "{key}");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let base = ["simulate", "-d", "1", "--delta", "0.2", "--theta", "1", "--solve-lambda", "--replicates", "100"];
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rgg"));
        cmd.args(base).args(extra).env_remove("RGG_SEED");
        if let Some(seed) = env {
            cmd.env("RGG_SEED", seed);
        }
        json(&cmd.arg("--bootstrap-resamples").arg("20").output().unwrap())
    };
    assert_eq!(run(Some("17"), &[])["seed"], 17);
    assert_eq!(run(Some("17"), &["--seed", "4"])["seed"], 4);
    assert_eq!(run(None, &[])["seed"], 0);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = rgg(&[
        "sweep", "-d", "2", "--theta", "1", "--deltas", "0.2,0.1", "--replicates", "200", "--seed", "3",
        "--bootstrap-resamples", "20", "--output", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, rgg_core::experiments::CSV_COLUMNS);
    assert_eq!(lines.count(), 2);
}

#[test]
fn help_lists_flags_with_units() {
    let out = rgg(&["simulate", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--dim", "--delta", "--lambda", "--theta", "--seed", "--replicates", "--workers", "--config"] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("(count)") && text.contains("RGG_SEED"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"d": 2, "delta": 0.05, "theta": 1, "solve_lambda": true}"#).unwrap();
    let r = json(&rgg(&["bounds", "--config", cfg.to_str().unwrap(), "--delta", "0.1"]));
    assert_eq!(r["delta"], 0.1);
    assert!((r["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    std::fs::write(&cfg, r#"{"d": 2, "bogus": 1}"#).unwrap();
    assert_eq!(rgg(&["bounds", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_suite_passes() {
    let out = rgg(&["verify", "--replicates", "20000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
