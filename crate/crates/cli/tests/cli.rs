use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gdisc(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gdisc"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("GDISC_THREADS", t),
        None => cmd.env_remove("GDISC_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn state(dir: &Path, name: &str, cov: &str) -> String {
    write(dir, name, &format!(r#"{{"version":"v1","modes":1,"mean":[0,0],"cov":{cov}}}"#))
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn report_vacuum_against_thermal() {
    let dir = tempfile::tempdir().unwrap();
    let rho = state(dir.path(), "rho.json", "[[1,0],[0,1]]");
    let sigma = state(dir.path(), "sigma.json", "[[3,0],[0,3]]");
    let o = gdisc(&["report", &rho, &sigma], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["case"], "AchievableFinite");
    assert!((v["dgmax"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!((v["dmax"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(v["classification"]["gamma_opt"].is_array());
}

#[test]
fn report_gap_pair_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let rho = state(dir.path(), "rho.json", "[[4.8,0],[0,1.875]]");
    let sigma = state(dir.path(), "sigma.json", "[[5,0],[0,5]]");
    let out = dir.path().join("r.csv");
    let o = gdisc(&["report", &rho, &sigma, "--format", "csv", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("case"), "gap");
    assert!(col("gap").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn malformed_matrix_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = state(dir.path(), "bad.json", "[[1,0],[0]]");
    let good = state(dir.path(), "good.json", "[[3,0],[0,3]]");
    let o = gdisc(&["report", &bad, &good], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cov row 1"), "{}", stderr(&o));
    let asym = state(dir.path(), "asym.json", "[[2,0.3],[0,2]]");
    let o = gdisc(&["report", &asym, &good], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 1)"), "{}", stderr(&o));
}

#[test]
fn domain_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rho = state(dir.path(), "rho.json", "[[5,0],[0,5]]");
    let sigma = state(dir.path(), "sigma.json", "[[3,0],[0,3]]");
    let o = gdisc(&["report", &rho, &sigma], None);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["error"], "domain_violation");
    assert!((v["min_eig"].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(gdisc(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(gdisc(&["scan", "--r-range", "1:0:5"], None).status.code(), Some(1));
    assert_eq!(gdisc(&["scan", "--tol-override", "nope=1"], None).status.code(), Some(1));
    assert_eq!(gdisc(&["scan", "--r-range", "0:1:3", "--m-range", "0:1:3"], Some("zero")).status.code(), Some(1));
    assert_eq!(gdisc(&["--help"], None).status.code(), Some(0));
}

#[test]
fn help_documents_csv_columns() {
    let o = gdisc(&["scan", "--help"], None);
    let text = stdout(&o);
    assert!(text.contains("interval_case"));
    assert!(text.contains("GDISC_THREADS"));
}

#[test]
fn scan_is_byte_identical_across_thread_counts() {
    let args = ["scan", "--n", "2", "--r-range", "-1:1:21", "--m-range", "0:2:11"];
    let a = gdisc(&args, Some("1"));
    let b = gdisc(&args, Some("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 1 + 21 * 11);
    assert!(text.starts_with("r,m,n,a,b,mu,case,interval_case,dgmax,dmax,gap,margin\n"));
    assert!(text.contains(",infinite,infinite,inf,inf,"));
    assert!(stderr(&a).contains("disagreements=0"));
}

#[test]
fn datahide_rows() {
    let o = gdisc(&["datahide", "--epsilon", "1e-4,2", "--kappa", "100,1"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let main = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 1e-4 && r[1].parse::<f64>().unwrap() == 100.0).unwrap();
    assert_eq!(main[5], "ok");
    assert!(main[8].parse::<f64>().unwrap() >= 2.2);
    let unit = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 1e-4 && r[1].parse::<f64>().unwrap() == 1.0).unwrap();
    assert_eq!(unit[5], "identical");
    assert_eq!(unit[8].parse::<f64>().unwrap(), 0.0);
    assert!(rows.iter().filter(|r| r[5] == "invalid").count() == 2);
}

#[test]
fn certify_reports_and_is_deterministic() {
    let args = ["certify", "--points", "5", "--format", "json"];
    let a = gdisc(&args, None);
    let b = gdisc(&args, Some("2"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn certify_low_cutoff_fails_with_hints() {
    let o = gdisc(&["certify", "--cutoff", "20", "--points", "3"], None);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("hint:"), "{text}");
    assert!(text.trim_end().ends_with("FAIL"));
}
