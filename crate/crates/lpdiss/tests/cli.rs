use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lpdiss");

fn data(name: &str) -> String {
    format!("{}/examples/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn elasticity_check_holds_with_its_margin() {
    let out = run(&["check", "--op", "elasticity", "--nu", "0.3", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "holds");
    let margin = r["margin"].as_f64().unwrap();
    assert!((margin - 0.172_839_506_172_839_5).abs() < 1e-12, "{margin}");
}

#[test]
fn diagonal_check_fails_with_a_witness() {
    let file = data("diag19.json");
    let out = run(&["check", "--op", "diag", "--file", &file, "--p", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["verdict"], "fails");
    assert!(r["margin"].as_f64().unwrap() < 0.0);
    assert!(r["witness"]["lambda"].is_array());
    assert!(r["witness"]["omega"].is_array());
    let interval = &r["p_interval"];
    assert!((interval["p_lo"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert!((interval["p_hi"].as_f64().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn real_angle_is_a_third_of_pi() {
    let file = data("real.json");
    let out = run(&["angle", "--op", "scalar", "--file", &file, "--p", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let third = std::f64::consts::FRAC_PI_3;
    assert!((r["interval"]["theta_plus"].as_f64().unwrap() - third).abs() < 1e-9);
    assert!((r["interval"]["theta_minus"].as_f64().unwrap() + third).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["check", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--op", "elasticity"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--op", "diag", "--file", "/nonexistent.json", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["elasticity", "--nu", "0.5", "--p", "2"]).status.code(), Some(2));
}

#[test]
fn region_csv_has_one_row_per_value() {
    let out = run(&["region", "--op", "elasticity", "--values", "-1,0.3,0.5,1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "nu,segment,p_lo,p_hi,closed_lo,closed_hi,empty");
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[2].starts_with("0.3,0,1.0920"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["elasticity", "--nu", "0.3", "--p", "20"];
    let printed = run(&args);
    assert_eq!(printed.status.code(), Some(1));
    let mut with_out = args.to_vec();
    let path_str = path.to_str().unwrap();
    with_out.extend(["--out", path_str]);
    let written = run(&with_out);
    assert_eq!(written.status.code(), Some(1));
    assert_eq!(std::fs::read(&path).unwrap(), printed.stdout);
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let config = serde_json::json!({
        "command": "check",
        "operator": {"op": "elasticity", "nu": 0.3},
        "p": 2.0,
        "plan": {"seed": 3}
    });
    std::fs::write(&path, config.to_string()).unwrap();
    let out = run(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["verdict"], "holds");
}

#[test]
fn oracle_reports_the_ladder_step() {
    let file = data("diag19.json");
    let out = run(&["oracle", "--op", "diag", "--file", &file, "--p", "10", "--dirs", "256"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert!(r["oracle"]["value"].as_f64().unwrap() < 0.0, "{r}");
}
