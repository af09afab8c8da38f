use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BASE: &str = r#""params":{"a":1,"s":1,"gamma":1},"scheme":"midpoint","dt":0.01"#;

fn galerkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galerkin"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("c.json");
    std::fs::write(&path, format!("{{{BASE},{body}}}")).unwrap();
    path.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn invariance_writes_report_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":4,"M":128,"T":0.5,"record_stride":10,"seed":11"#,
    );
    let out = tmp.path().join("out");
    let o = galerkin(&[
        "invariance",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS invariance"));
    let r = report(&out);
    assert_eq!(r["experiment"], "invariance");
    assert_eq!(r["config"]["seed"], 11);
    assert!(r["build"].is_string());
    assert!(r["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(out.join("modes.csv")).unwrap();
    assert!(csv.starts_with("k1,k2,theory,mean_t0"));
    assert_eq!(csv.lines().count(), 1 + 6);

    // same config, same result
    let out2 = tmp.path().join("out2");
    galerkin(&[
        "invariance",
        "--config",
        &cfg,
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(report(&out)["result"], report(&out2)["result"]);
}

#[test]
fn statistical_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":4,"M":64,"T":1,"record_stride":10,"seed":3,"thresholds":{"z_max":1e-9}"#,
    );
    let o = galerkin(&[
        "invariance",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&tmp.path().join("o"))["passed"], false);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let no_seed = write_config(tmp.path(), r#""N":4,"M":8,"T":1,"record_stride":1"#);
    let o = galerkin(&[
        "invariance",
        "--config",
        &no_seed,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    assert_eq!(galerkin(&["invariance", "--bogus"]).status.code(), Some(1));
    assert_eq!(galerkin(&["frobnicate"]).status.code(), Some(1));
    let missing = tmp.path().join("nope.json");
    let o = galerkin(&["density", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn density_table_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":4,"M":1000,"T":0,"record_stride":1,"seed":1"#,
    );
    let o = galerkin(&[
        "density", "--config", &cfg, "--r-max", "10", "--points", "2000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,rho"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2000);
    assert_eq!(rows[0], (0.0, 0.0));
    assert_eq!(rows[1999].0, 10.0);
    assert!(rows.iter().all(|r| r.1 >= 0.0));

    let check = tmp.path().join("check");
    let o = galerkin(&[
        "density",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("d.csv").to_str().unwrap(),
        "--check",
        check.to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    assert!(check.join("histogram.csv").exists());
    assert_eq!(report(&check)["experiment"], "density");
}

#[test]
fn coeffs_for_one_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":4,"M":1,"T":0,"record_stride":1,"seed":1"#,
    );
    let o = galerkin(&["coeffs", "--config", &cfg, "--k", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("h1,h2,k_minus_h1,k_minus_h2,alpha"));
    assert!(text.lines().count() > 1);
    let o = galerkin(&["coeffs", "--config", &cfg, "--k", "0,-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evolve_logs_conservation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":4,"M":1,"T":1,"record_stride":10,"seed":8"#,
    );
    let out = tmp.path().join("ev");
    let o = galerkin(&[
        "evolve",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--snapshots",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let lines: Vec<Value> = std::fs::read_to_string(out.join("trajectory.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0]["field"]["modes"].is_array());
    assert_eq!(lines[10]["t"].as_f64().unwrap(), 1.0);
    assert!(std::fs::read_to_string(out.join("conservation.csv"))
        .unwrap()
        .starts_with("t,E,S,dE_rel,dS_rel"));

    // restart from a stored field
    let field = tmp.path().join("f.json");
    std::fs::write(&field, lines[10]["field"].to_string()).unwrap();
    let o = galerkin(&[
        "evolve",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("ev2").to_str().unwrap(),
        "--input",
        field.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn sample_surface_recurrence_and_convergence_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#""N":2,"M":64,"T":0.5,"record_stride":10,"seed":21,
           "recurrence":{"alpha":3,"t_max":50,"initial_conditions":2,"reference_samples":20},
           "convergence":{"n_small":[1,2],"n_large":4,"alpha":3}"#,
    );
    let dir = |s: &str| tmp.path().join(s).to_str().unwrap().to_string();
    let o = galerkin(&[
        "sample",
        "--config",
        &cfg,
        "--out",
        &dir("s"),
        "--measure",
        "nu",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("s/samples.jsonl"))
            .unwrap()
            .lines()
            .count(),
        64
    );
    let o = galerkin(&["surface", "--config", &cfg, "--out", &dir("v")]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    assert!(tmp.path().join("v/off_diagonal.csv").exists());
    let o = galerkin(&["recurrence", "--config", &cfg, "--out", &dir("r")]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    assert!(tmp.path().join("r/distance.jsonl").exists());
    assert!(tmp.path().join("r/returns.csv").exists());
    let o = galerkin(&["convergence", "--config", &cfg, "--out", &dir("c")]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    assert!(
        std::fs::read_to_string(tmp.path().join("c/convergence.csv"))
            .unwrap()
            .starts_with("N,mean,se")
    );
}
