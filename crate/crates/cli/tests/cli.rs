use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac-search"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = run(&[
            "critical", "--dim", "3", "--source", "lattice", "--side", "9", "--points", "17", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(String::from_utf8_lossy(&runs[0]).lines().count(), 19);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn csv_numbers_carry_seventeen_digits() {
    let o = run(&["critical", "--dim", "2", "--source", "lattice", "--side", "7", "--points", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# "));
    let meta: serde_json::Value = serde_json::from_str(&header[2..]).unwrap();
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config"]["side"], 7);
    assert_eq!(lines.next().unwrap(), "r,omega,gamma,u");
    for line in lines {
        for cell in line.split(',') {
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
            cell.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn several_dimensions_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("curve");
    let o = run(&[
        "critical", "--dim", "2,3", "--source", "lattice", "--side", "5", "--points", "5", "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(dir.path().join("curve_d2.csv").exists());
    assert!(dir.path().join("curve_d3.csv").exists());
}

#[test]
fn empty_ratio_range_is_a_usage_error() {
    let o = run(&["critical", "--dim", "3", "--r-min", "2", "--r-max", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_branch_is_a_usage_error() {
    let o = run(&["predict", "--dim", "3", "--side", "12", "--branch", "middle"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_lattice_is_a_usage_error() {
    assert_eq!(run(&["predict", "--dim", "7", "--side", "4"]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--dim", "3", "--side", "1"]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--dim", "3", "--side", "8", "--fraction", "1.5"]).status.code(), Some(2));
}

#[test]
fn out_of_range_tolerance_is_a_usage_error() {
    let o = run(&["evolve", "--dim", "2", "--side", "4", "--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("p.json");
    let o = run(&["predict", "--dim", "3", "--side", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn predicted_weight_matches_discrete_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = run(&["predict", "--dim", "3", "--side", "12", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    let ratio = v["result"]["eigenvalue_ratio"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
    let gamma = v["result"]["gamma"].as_f64().unwrap();
    let omega = v["result"]["omega"].as_f64().unwrap();
    let omega_star = v["result"]["omega_star"].as_f64().unwrap();
    assert!(gamma > 0.0);
    assert!((omega / omega_star - 0.8).abs() < 1e-12);
}

#[test]
fn single_point_grid_reports_the_uniform_weight() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let o = run(&[
        "evolve", "--dim", "2", "--side", "6", "--grid-points", "1", "--out", prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let row = csv.lines().nth(2).unwrap();
    let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cells[0], 0.0);
    assert!((cells[1] - 1.0 / 36.0).abs() < 1e-15);
    let summary = json_file(&dir.path().join("run.json"));
    assert!((summary["result"]["p_star"].as_f64().unwrap() - 1.0 / 36.0).abs() < 1e-15);
}

#[test]
fn evolve_finds_an_amplified_peak() {
    let o = run(&["evolve", "--dim", "3", "--side", "6", "--grid-points", "48"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p_star = v["result"]["p_star"].as_f64().unwrap();
    let drift = v["result"]["norm_drift"].as_f64().unwrap();
    assert!(p_star > 0.3, "p_star {p_star}");
    assert!(drift < 1e-9);
}

#[test]
fn fast_validation_succeeds() {
    let o = run(&["validate", "--level", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 20);
    assert!(!text.contains("FAIL"));
}

#[test]
fn impossible_tolerance_fails_validation() {
    let o = run(&["validate", "--level", "fast", "--tol", "1e-16"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}

#[test]
fn validation_report_as_json() {
    let o = run(&["validate", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["result"]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn thread_count_from_environment() {
    let o = bin()
        .args(["predict", "--dim", "2", "--side", "8"])
        .env("DIRAC_SEARCH_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let bad = bin()
        .args(["predict", "--dim", "2", "--side", "8"])
        .env("DIRAC_SEARCH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn literal_laplacian_sign_fails_the_dense_oracle() {
    let o = run(&["validate", "--level", "full", "--sign", "literal"]);
    assert_eq!(o.status.code(), Some(3));
    let text = String::from_utf8(o.stdout).unwrap();
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|l| l.contains("dense vs")), "{failed:?}");
}
