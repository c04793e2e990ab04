use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isingprobe")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn qfi_column(csv: &str) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect()
}

#[test]
fn qfi_surface_has_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["qfi", "--N", "100", "--delta", "0.1", "--lambda", "0.7:1.1:200", "--t", "0:30:300", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,t,L,dlogL,qfi,flag"));
    assert_eq!(lines.count(), 60000);

    let m = manifest(dir.path());
    assert_eq!(m["command"], "qfi");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
    assert_eq!(m["outputs"][0]["file"], "surface.csv");
    assert_eq!(m["outputs"][0]["sha256"], isingprobe::report::sha256_hex(csv.as_bytes()));
}

#[test]
fn temperature_flag_selects_thermal_echo() {
    let (g, t) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let base = ["qfi", "--N", "40", "--delta", "0.2", "--lambda", "0.6:1.0:6", "--t", "0:10:7"];
    assert_eq!(code(&run(&[&base[..], &["--out", &out_arg(g.path())]].concat())), 0);
    assert_eq!(code(&run(&[&base[..], &["--T", "0.3", "--out", &out_arg(t.path())]].concat())), 0);
    let fg = qfi_column(&fs::read_to_string(g.path().join("surface.csv")).unwrap());
    let ft = qfi_column(&fs::read_to_string(t.path().join("surface.csv")).unwrap());
    assert!(fg.iter().zip(&ft).any(|(a, b)| a != b));
    assert_eq!(manifest(t.path())["config"]["common"]["temperature"], 0.3);
}

#[test]
fn zero_coupling_gives_zero_qfi() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["qfi", "--N", "50", "--delta", "0", "--lambda", "0.5:1.5:11", "--t", "0:20:11", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let f = qfi_column(&fs::read_to_string(dir.path().join("surface.csv")).unwrap());
    assert_eq!(f.len(), 121);
    assert!(f.iter().all(|v| *v == 0.0));
}

#[test]
fn reruns_are_byte_identical_across_workers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let base = ["echo", "--N", "60", "--n-delta", "6", "--lambda", "0.8:1.0:15", "--t", "0:18:20", "--T", "0.05"];
    assert_eq!(code(&run(&[&base[..], &["--workers", "1", "--out", &out_arg(a.path())]].concat())), 0);
    assert_eq!(code(&run(&[&base[..], &["--workers", "4", "--out", &out_arg(b.path())]].concat())), 0);
    assert_eq!(
        fs::read(a.path().join("surface.csv")).unwrap(),
        fs::read(b.path().join("surface.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let both = run(&["qfi", "--N", "10", "--delta", "0.1", "--n-delta", "1", "--lambda", "0:1:3", "--t", "0:1:3", "--out", &out]);
    assert_eq!(code(&both), 2);
    let odd = run(&["qfi", "--N", "7", "--delta", "0.1", "--lambda", "0:1:3", "--t", "0:1:3", "--out", &out]);
    assert_eq!(code(&odd), 2);
    let range = run(&["qfi", "--N", "10", "--delta", "0.1", "--lambda", "0:1", "--t", "0:1:3", "--out", &out]);
    assert_eq!(code(&range), 2);
    let missing = run(&["qfi", "--N", "10", "--delta", "0.1", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(code(&missing), 2);
    let scale = run(&["symmetry", "--n0", "10", "--alpha", "1.5", "--n-delta", "5", "--out", &out]);
    assert_eq!(code(&scale), 2);
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // a flat surface has no peaks
    let o = run(&["peaks", "--N", "20", "--delta", "0", "--lambda", "0.5:1.5:10", "--t", "0:5:10", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# ring\nN = 100\ndelta = 0.1\nlambda = 0.7:1.1:30\nt = 0:30:40\ncount = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["peaks", "--config", cfg.to_str().unwrap(), "--N", "80", "--out", &out_arg(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("peaks.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "peak_index,lambda_star,t_star,qfi_star,N,delta,temperature");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.split(',').nth(4) == Some("80")));
    assert_eq!(manifest(&out)["config"]["surface"]["ring"]["n"], 80);
}

#[test]
fn scaling_writes_fit_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "scaling", "--n", "40,60,80,100", "--n-delta", "10", "--peak", "1", "--lambda-steps", "80", "--t-steps", "120",
        "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    for key in ["peak_index", "a", "b", "c", "r2", "n_values", "f_values"] {
        assert!(fit.get(key).is_some(), "missing {key}");
    }
    assert_eq!(fit["n_values"].as_array().unwrap().len(), 4);
    assert!(fit["a"].as_f64().unwrap() > 0.0);
    let peaks = fs::read_to_string(dir.path().join("peaks.csv")).unwrap();
    assert_eq!(peaks.lines().count(), 5);
    assert_eq!(manifest(dir.path())["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn symmetry_writes_residual_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "symmetry", "--n0", "20", "--alpha", "2", "--n-delta", "10", "--lambda", "-0.5:0.5:20", "--t", "0:6:25",
        "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let residual = fs::read_to_string(dir.path().join("residual.csv")).unwrap();
    assert_eq!(residual.lines().count(), 1 + 20 * 25);
    let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_left,bin_right,count"));
    assert_eq!(hist.lines().count(), 51);
    let m = manifest(dir.path());
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["residual.csv", "histogram.csv"]);
}

#[test]
fn quick_oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["oracle-check", "--quick", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 4);
    assert!(checks.iter().all(|c| c["passed"] == true));
}
