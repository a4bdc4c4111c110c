use std::process::Command;

use sleobs_cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("sleobs").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> serde_json::Value {
    let (code, out, err) = call(args);
    assert_eq!(code, EXIT_PASS, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn identities_hold_at_eight_thirds() {
    let (code, out, _) = call(&["identities", "--kappa", "8/3"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("a=0.866025403784438"), "{out}");
    assert!(out.lines().filter(|l| l.contains("residual")).all(|l| l.ends_with("ok")));
    let v = json(&["identities", "--kappa", "6", "--format", "json"]);
    assert_eq!(v["pass"], true);
    assert_eq!(v["result"]["params"]["h12"], 0.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["martingale-test", "--kappa", "-1", "--observable", "lsw_poisson"][..],
        &["identities"],
        &["identities", "--kappa", "abc"],
        &["eval", "--kappa", "4", "--divisor", "node 0.4 1 1"],
        &["martingale-test", "--kappa", "2", "--observable", "no_such"],
        &["bpz-residual", "--kappa", "6", "--format", "csv"],
        &["no-such-command"],
    ] {
        let (code, _, err) = call(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    assert_eq!(call(&["--help"]).0, EXIT_PASS);
}

#[test]
fn bpz_residuals_pass() {
    let v = json(&["bpz-residual", "--kind", "virasoro", "--kappa", "6", "--samples", "30"]);
    assert_eq!(v["pass"], true);
    assert!(v["result"]["max_residual"].as_f64().unwrap() < 1e-9);
    let v = json(&["bpz-residual", "--kind", "boundary", "--kappa", "3", "--samples", "30"]);
    assert_eq!(v["pass"], true);
}

#[test]
fn fw_limit_passes_with_capacity_radius() {
    let v = json(&["fw-limit", "--theta", "1.5707963267948966"]);
    assert_eq!(v["pass"], true);
    let (code, _, _) = call(&["fw-limit", "--radius", "literal", "--theta", "1.5707963267948966"]);
    assert_eq!(code, EXIT_FAIL);
}

#[test]
fn martingale_csv_and_thread_independence() {
    let base = ["martingale-test", "--observable", "lsw_poisson", "--kappa", "2", "--z", "0.1,0.4", "--n", "200"];
    let run_with = |threads: &str, format: &str| {
        let mut args = base.to_vec();
        args.extend(["--times", "0.1,0.2", "--t", "0.2", "--threads", threads, "--format", format]);
        call(&args)
    };
    let (code, one, _) = run_with("1", "json");
    assert!(code == EXIT_PASS || code == EXIT_FAIL);
    assert_eq!(one, run_with("3", "json").1);
    let (_, csv, _) = run_with("2", "csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,mean_re,mean_im,stderr,z_re,z_im"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn non_neutral_divisor_runs_the_drift_control() {
    let (code, out, err) =
        call(&["martingale-test", "--kappa", "4", "--divisor", "node 0,0.4 1 0", "--n", "300", "--times", "0.5"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["drift_detected"], true);
}

#[test]
fn eval_at_time_zero_is_the_formal_value() {
    let v = json(&["eval", "--kappa", "4", "--divisor", "node 0,0.4 0.5 0.5; root -0.5 -0.5"]);
    let pts = v["result"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert!(pts[0]["im"].as_f64().unwrap().abs() < 1e-15);
    let (code, csv, _) = call(&[
        "eval",
        "--kappa",
        "4",
        "--divisor",
        "node 0,0.4 0.5 0.5; root -0.5 -0.5",
        "--t",
        "0.1",
        "--every",
        "50",
        "--format",
        "csv",
    ]);
    assert_eq!(code, EXIT_PASS);
    assert!(csv.starts_with("t,re,im,log_re,log_im\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn simulated_driver_round_trips_through_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("driver.csv");
    let p = path.to_str().unwrap();
    let (code, _, err) = call(&["simulate", "--kappa", "4", "--t", "0.05", "--seed", "7", "--out", p]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("k,t,theta\n"));
    assert_eq!(text.lines().count(), 52);
    let from_file = call(&["trace", "--driver", p, "--samples", "5", "--format", "csv"]).1;
    let direct = call(&["trace", "--kappa", "4", "--t", "0.05", "--seed", "7", "--samples", "5", "--format", "csv"]).1;
    assert_eq!(from_file, direct);
    assert!(from_file.starts_with("k,t,re,im\n"));
}

#[test]
fn catalog_lists_names() {
    let v = json(&["list-observables"]);
    let names: Vec<&str> = v["result"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"lsw_poisson"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sleobs");
    let ok = Command::new(bin).args(["identities", "--kappa", "4"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_PASS));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("kappa=4"));
    let bad = Command::new(bin).args(["identities", "--kappa", "x"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
