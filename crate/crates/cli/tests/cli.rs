use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn varmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varmix"))
        .args(args)
        .env_remove("VARMIX_WORKERS")
        .output()
        .expect("binary runs")
}

fn toy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy.csv")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn toy_fit_converges() {
    let toy = toy();
    let out = varmix(&["fit", "--data", toy.to_str().unwrap(), "--likelihood", "logistic", "--penalty", "ridge", "--tau", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["status"], "converged");
    assert_eq!(r["coefficients"].as_array().unwrap().len(), 3);
    assert_eq!(r["coefficients"][0]["name"], "x1");
    let trace = r["objective_trace"].as_array().unwrap();
    assert!(trace.windows(2).all(|w| w[1].as_f64().unwrap() <= w[0].as_f64().unwrap() + 1e-10));
}

#[test]
fn every_algorithm_reaches_the_same_fit() {
    let toy = toy();
    let mut betas = Vec::new();
    for algo in ["em", "em-accel", "irls", "irls-pen", "bfgs", "cg"] {
        let accel = if algo == "em" { "off" } else { "on" };
        let out = varmix(&["fit", "--data", toy.to_str().unwrap(), "--likelihood", "logistic", "--algo", algo, "--accel", accel]);
        assert_eq!(out.status.code(), Some(0), "{algo}");
        let r = json(&out);
        assert_eq!(r["algorithm"], algo);
        let beta: Vec<f64> = r["coefficients"].as_array().unwrap().iter().map(|c| c["value"].as_f64().unwrap()).collect();
        betas.push(beta);
    }
    for b in &betas[1..] {
        for (x, y) in b.iter().zip(&betas[0]) {
            assert!((x - y).abs() < 1e-4);
        }
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = varmix(&["fit", "--data", "x.csv", "--likelihood", "gauss", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_cell_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,y\n1,2\n2,3\nx,4\n").unwrap();
    let out = varmix(&["fit", "--data", path.to_str().unwrap(), "--likelihood", "gauss"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("column a"), "{err}");
}

#[test]
fn zero_one_labels_match_signed_labels() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(toy()).unwrap();
    let recoded: String = text
        .lines()
        .map(|l| match l.strip_suffix(",-1") {
            Some(head) => format!("{head},0\n"),
            None => format!("{l}\n"),
        })
        .collect();
    assert!(recoded.contains(",0\n"));
    let path = dir.path().join("01.csv");
    std::fs::write(&path, recoded).unwrap();
    let fit = |p: &Path| {
        let out = varmix(&["fit", "--data", p.to_str().unwrap(), "--likelihood", "logistic", "--penalty", "lasso"]);
        assert_eq!(out.status.code(), Some(0));
        json(&out)["coefficients"].clone()
    };
    assert_eq!(fit(&path), fit(&toy()));
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let toy = toy();
    let args = ["fit", "--data", toy.to_str().unwrap(), "--likelihood", "logistic", "--penalty", "dpareto:2", "--tau", "0.5", "--seed", "7"];
    let a = without_timings(json(&varmix(&args)));
    let b = without_timings(json(&varmix(&args)));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn identity_check_prints_a_passing_table() {
    let out = varmix(&["identity-check"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("PASS") && !table.contains("FAIL"));
    assert!(table.trim_end().ends_with("0 failed"));
}

#[test]
fn gaussian_posterior_mean_halves_y() {
    let out = varmix(&["posterior-mean", "--prior", "ridge", "--likelihood", "gauss:1", "--y", "-3,2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let means: Vec<f64> = r["result"].as_array().unwrap().iter().map(|row| row["mean"].as_f64().unwrap()).collect();
    assert!((means[0] + 1.5).abs() < 1e-8 && (means[1] - 1.0).abs() < 1e-8, "{means:?}");
}

#[test]
fn simulate_then_fit_path_with_cv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("q.csv");
    let csv = dir.path().join("cv.csv");
    let out = varmix(&["simulate", "--design", "quantile:60:8:0.5:1", "--seed", "3", "--output", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["beta_true"].as_array().unwrap().len(), 8);
    let out = varmix(&[
        "path",
        "--data",
        data.to_str().unwrap(),
        "--likelihood",
        "quantile:0.5",
        "--penalty",
        "lasso",
        "--grid",
        "1e-2:1e1:6",
        "--cv",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["result"]["path"]["points"].as_array().unwrap().len(), 6);
    assert!(r["result"]["cv"]["tau_star"].as_f64().unwrap() > 0.0);
    // Header plus one row per (grid point, fold).
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 1 + 6 * 3);
}

#[test]
fn multinomial_fit_reports_each_class() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(&path, "c,a\n1,0.5\n2,1.5\n3,-0.5\n1,0.7\n2,1.2\n3,-0.9\n1,0.1\n2,2.0\n3,-1.0\n").unwrap();
    let out = varmix(&[
        "fit", "--data", path.to_str().unwrap(), "--response", "c", "--task", "multinomial", "--likelihood", "logistic", "--penalty", "ridge",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let classes: Vec<u64> = r["coefficients"].as_array().unwrap().iter().map(|c| c["class"].as_u64().unwrap()).collect();
    assert_eq!(classes, vec![1, 2, 3]);
}

#[test]
fn experiment_report_is_reproducible() {
    let run = || without_timings(json(&varmix(&["experiment", "--name", "multinomial", "--seed", "2"])));
    let a = run();
    assert_eq!(a["command"], "experiment");
    assert!(a["result"]["max_gap"].as_f64().unwrap() < 1e-4);
    assert_eq!(a, run());
}
