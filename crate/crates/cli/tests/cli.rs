//! End-to-end tests of the `miscrit` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use miscrit::{gen_poly_cubic, replicate_rng};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_miscrit"))
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args).env_remove("MISCRIT_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_cubic_csv(path: &Path, n: usize, sigma: f64, seed: u64) {
    let mut rng = replicate_rng(seed, 0);
    let raw = gen_poly_cubic(n, sigma, &mut rng);
    let mut csv = String::from("y,x\n");
    for i in 0..raw.n() {
        csv.push_str(&format!("{},{}\n", raw.y[i], raw.covariates[(i, 0)]));
    }
    fs::write(path, csv).unwrap();
}

#[test]
fn fit_exact_linear_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("exact.csv");
    fs::write(&p, "y,x\n1,1\n2,2\n3,3\n").unwrap();
    let out = run(&[
        "fit",
        p.to_str().unwrap(),
        "--response",
        "y",
        "--intercept",
    ], &[]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn fit_logistic_bad_response_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "y,x\n0,1\n2,2\n1,3\n").unwrap();
    let out = run(&[
        "fit",
        p.to_str().unwrap(),
        "--family",
        "logistic",
        "--intercept",
    ], &[]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("row 1"), "stderr: {err}");
}

#[test]
fn missing_response_column_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cols.csv");
    fs::write(&p, "a,b\n1,2\n3,4\n").unwrap();
    let out = run(&["fit", p.to_str().unwrap(), "--response", "nope"], &[]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn fit_json_keeps_the_endpoint_identity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("lin.csv");
    write_cubic_csv(&p, 60, 1.0, 7);
    let out = run(&[
        "fit",
        p.to_str().unwrap(),
        "--intercept",
        "--format",
        "json",
    ], &[]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["criteria", "candidates", "chosen", "meta"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let cand = &v["candidates"][0];
    let gaic = cand["scores"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s[0] == "GAIC")
        .unwrap()[1]
        .as_f64()
        .unwrap();
    let sic0 = cand["sic_grid"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s[0].as_f64() == Some(0.0))
        .unwrap()[1]
        .as_f64()
        .unwrap();
    assert!((gaic - sic0).abs() <= 1e-12 * gaic.abs().max(1.0));
}

#[test]
fn select_cubic_csv_sic_picks_order_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cubic.csv");
    write_cubic_csv(&p, 200, 0.5, 42);
    let out = run(&[
        "select",
        p.to_str().unwrap(),
        "--orders",
        "1,2,3,4,5,6",
        "--format",
        "json",
    ], &[]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let chosen = v["chosen"].as_array().unwrap();
    let sic_idx = chosen
        .iter()
        .find(|c| c[0] == "SIC")
        .unwrap()[1]
        .as_u64()
        .unwrap() as usize;
    assert_eq!(v["candidates"][sic_idx]["candidate"]["order"], 3);
}

#[test]
fn select_text_and_json_scores_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cubic.csv");
    write_cubic_csv(&p, 80, 1.0, 5);
    let args = ["select", p.to_str().unwrap(), "--orders", "1,2,3"];
    let j = run(&[&args[..], &["--format", "json"][..]].concat(), &[]);
    let c = run(&[&args[..], &["--format", "csv"][..]].concat(), &[]);
    assert_eq!(j.status.code(), Some(0));
    assert_eq!(c.status.code(), Some(0));

    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    let mut json_scores: Vec<f64> = Vec::new();
    for cand in v["candidates"].as_array().unwrap() {
        for s in cand["scores"].as_array().unwrap() {
            json_scores.push(s[1].as_f64().unwrap());
        }
    }
    let mut csv_scores: Vec<f64> = Vec::new();
    for line in stdout(&c).lines().skip(1) {
        for field in line.split(',').skip(3) {
            csv_scores.push(field.parse().unwrap());
        }
    }
    assert_eq!(json_scores.len(), csv_scores.len());
    for (a, b) in json_scores.iter().zip(&csv_scores) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn select_without_candidates_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    write_cubic_csv(&p, 30, 1.0, 1);
    let out = run(&["select", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

fn small_config(dir: &Path, replicates: usize) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    fs::write(
        &p,
        format!(
            r#"{{"experiment": "PolyCubic", "n": 60, "sigma": 1.0,
                "replicates": {replicates}, "seed": 77,
                "criteria": ["AIC", "BIC", "GAIC", "GBIC", "SIC"],
                "candidates": {{"orders": [1, 2, 3, 4, 5, 6]}}}}"#
        ),
    )
    .unwrap();
    p
}

#[test]
fn simulate_single_replicate_has_one_count_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_config(dir.path(), 1);
    let out = run(&["simulate", p.to_str().unwrap(), "--format", "csv"], &[]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for line in stdout(&out).lines().skip(1) {
        let total: u64 = line
            .split(',')
            .skip(1)
            .map(|f| f.parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 1, "line: {line}");
    }
}

#[test]
fn simulate_json_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_config(dir.path(), 12);
    let serial = run(
        &["simulate", p.to_str().unwrap(), "--format", "json"],
        &[("MISCRIT_THREADS", "1")],
    );
    let parallel = run(
        &["simulate", p.to_str().unwrap(), "--format", "json"],
        &[("MISCRIT_THREADS", "8")],
    );
    assert_eq!(serial.status.code(), Some(0));
    assert_eq!(parallel.status.code(), Some(0));
    assert_eq!(serial.stdout, parallel.stdout);
    assert!(!serial.stdout.is_empty());
}

#[test]
fn simulate_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_config(dir.path(), 12);
    let base = run(&["simulate", p.to_str().unwrap(), "--format", "json"], &[]);
    let other = run(
        &["simulate", p.to_str().unwrap(), "--seed", "123", "--format", "json"],
        &[],
    );
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(base.stdout, other.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&other)).unwrap();
    assert_eq!(v["meta"]["seed"], 123);
}

#[test]
fn simulate_bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"experiment": "PolyCubic", "n": 60}"#).unwrap();
    let out = run(&["simulate", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}
