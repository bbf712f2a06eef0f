use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FLAT: &str = "\
medium.lambda = 1
medium.mu = 2
medium.omega = 6.283185307179586
incidence.theta1 = 0.5235987755982988
incidence.theta2 = 0.5235987755982988
modes.window = 5
mesh.resolution = 8,8,12
";

fn run(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_elastic-grating"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exact_conserves_energy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("exact");
    let o = run("exact", FLAT, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert!(s["results"]["energy_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(s["config"]["medium.mu"], "2");
    let csv = fs::read_to_string(out.join("efficiencies.csv")).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("n1,n2,e1,e2"));
    let total: f64 = rows
        .flat_map(|l| l.split(',').skip(2).map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn pml_check_reports_small_discrepancy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pml");
    let o = run("pml-check", FLAT, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("max cross-check discrepancy"));
    assert!(summary(&out)["results"]["max_discrepancy"].as_f64().unwrap() < 1e-9);
    assert_eq!(fs::read_to_string(out.join("pml_check.csv")).unwrap().lines().count(), 1 + 121);
}

#[test]
fn missing_key_is_config_error_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("missing");
    let cfg = FLAT.replace("medium.mu = 2\n", "");
    let o = run("exact", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: config: ") && err.contains("medium.mu"), "{err}");
    assert!(!out.exists());
}

#[test]
fn bad_arguments_and_values_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bad");
    let o = run("no-such-command", FLAT, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: config: "));
    let o = run("exact", &format!("{FLAT}incidence.theta1 = 3\n"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = run("solve3d", &format!("{}geometry.kind = two_bumps\n", FLAT.replace("8,8,12", "7,7,12")), &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unconverged_solve_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nc");
    let o = run("solve3d", &format!("{FLAT}solver.tol = 1e-30\nsolver.max_iter = 2\n"), &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: numerical: "));
    assert!(!out.exists());
}

#[test]
fn violated_tolerance_exits_four_with_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("viol");
    let o = run("pml-check", &format!("{FLAT}check.tol = 1e-30\n"), &out, &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error: bound-violation: "));
    assert!(summary(&out)["violation"].is_string());
}

#[test]
fn solve3d_flat_runs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s3");
    let o = run("solve3d", &format!("{FLAT}output.field = true\n"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out);
    assert!(s["results"]["l2_error"].as_f64().unwrap() < 0.03);
    assert!(s["results"]["energy_deviation"].as_f64().unwrap() < 0.05);
    assert!(out.join("field.txt").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for sub in ["dtn-check", "solve1d", "solve3d", "sweep"] {
        let (a, b) = (dir.path().join(format!("{sub}-a")), dir.path().join(format!("{sub}-b")));
        assert!(run(sub, FLAT, &a, &["--seed", "7"]).status.success());
        assert!(run(sub, FLAT, &b, &["--seed", "7"]).status.success());
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{sub}/{n:?}");
        }
        assert_eq!(summary(&a)["seed"], 7);
    }
}

#[test]
fn seed_changes_random_samples_only() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("dtn-check", FLAT, &a, &["--seed", "1"]).status.success());
    assert!(run("dtn-check", FLAT, &b, &["--seed", "2"]).status.success());
    assert_ne!(fs::read(a.join("dtn_check.csv")).unwrap(), fs::read(b.join("dtn_check.csv")).unwrap());
    for out in [&a, &b] {
        assert!(summary(out)["results"]["max_relative_residual"].as_f64().unwrap() < 1e-10);
    }
}
