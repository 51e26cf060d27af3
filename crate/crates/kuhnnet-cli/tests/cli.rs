use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kuhnnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuhnnet"))
        .args(args)
        .current_dir(dir)
        .env_remove("KUHNNET_MAX_LATTICE")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn write_samples(dir: &Path, k: usize) -> String {
    let mut csv = String::from("x,y\n");
    for i in 0..k {
        let x = i as f64 / k as f64;
        csv.push_str(&format!("{x},{}\n", (5.0 * x).sin()));
    }
    let name = format!("s{k}.csv");
    fs::write(dir.join(&name), csv).unwrap();
    name
}

#[test]
fn build_then_verify_passes() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["build", "--target", "min-coords", "--d", "2", "--n", "4", "--out", "net.json", "--report", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(t.path(), "r.json");
    assert_eq!(r["format"], "kuhnnet-build/1");
    assert_eq!(r["within_bounds"], true);

    let o = kuhnnet(
        t.path(),
        &["verify", "--net", "net.json", "--target", "min-coords", "--d", "2", "--n", "4", "--scan-points", "5000", "--pairs", "5000", "--report", "v.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = report(t.path(), "v.json");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_fails_against_the_wrong_target() {
    let t = TempDir::new().unwrap();
    kuhnnet(t.path(), &["build", "--target", "linear", "--d", "2", "--n", "2", "--out", "net.json"]);
    let o = kuhnnet(
        t.path(),
        &["verify", "--net", "net.json", "--target", "constant:3", "--d", "2", "--n", "2", "--scan-points", "500", "--pairs", "500"],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("interpolation"));
}

#[test]
fn grid_file_round_trip_through_eval() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("g.csv"), "0,0,1\n0,1,2\n1,0,3\n1,1,5\n").unwrap();
    let o = kuhnnet(t.path(), &["build", "--grid", "g.csv", "--out", "net.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(t.path().join("pts.csv"), "x1,x2\n0,0\n1,1\n0,1\n").unwrap();
    let o = kuhnnet(t.path(), &["eval", "--net", "net.json", "--input", "pts.csv"]);
    let out = String::from_utf8(o.stdout).unwrap();
    let vals: Vec<f64> = out.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(out.lines().next(), Some("value"));
    assert_eq!(vals.len(), 3);
    for (v, want) in vals.iter().zip([1.0, 5.0, 2.0]) {
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn shape_must_cover_the_lattice() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["build", "--target", "linear", "--d", "2", "--n", "2", "--shape", "4,4", "--out", "n.json"]);
    assert_eq!(code(&o), 2);
    let o = kuhnnet(t.path(), &["build", "--target", "linear", "--d", "2", "--n", "2", "--shape", "4,5", "--out", "n.json"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["build", "--target", "wave", "--d", "2", "--n", "2", "--out", "n.json"]);
    assert_eq!(code(&o), 2);
    let o = kuhnnet(t.path(), &["build", "--target", "linear", "--d", "3", "--n", "200", "--out", "n.json"]);
    assert_eq!(code(&o), 3);
    let o = kuhnnet(t.path(), &["eval", "--net", "missing.json"]);
    assert_eq!(code(&o), 4);
    let o = kuhnnet(t.path(), &["build", "--grid", "missing.json", "--out", "n.json"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn lattice_cap_follows_the_environment() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kuhnnet"))
        .args(["build", "--target", "linear", "--d", "2", "--n", "4", "--out", "n.json"])
        .current_dir(t.path())
        .env("KUHNNET_MAX_LATTICE", "10")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn sqrt_memorizer_width_for_25_samples() {
    let t = TempDir::new().unwrap();
    let s = write_samples(t.path(), 25);
    let o = kuhnnet(t.path(), &["memorize", "--samples", &s, "--out", "m.json", "--report", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(t.path(), "r.json");
    assert!(r["width"].as_u64().unwrap() <= 10);
    assert_eq!(r["depth"], 2);
}

#[test]
fn single_sample_gives_a_constant() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("one.csv"), "0.3,2.5\n").unwrap();
    assert_eq!(code(&kuhnnet(t.path(), &["memorize", "--samples", "one.csv", "--out", "m.json"])), 0);
    fs::write(t.path().join("p.csv"), "-4\n0.3\n9\n").unwrap();
    let o = kuhnnet(t.path(), &["eval", "--net", "m.json", "--input", "p.csv"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().skip(1).all(|l| l.parse::<f64>().unwrap() == 2.5), "{out}");
}

#[test]
fn deep_capacity_violation_reports_the_bound() {
    let t = TempDir::new().unwrap();
    let s = write_samples(t.path(), 51);
    let o = kuhnnet(t.path(), &["memorize", "--samples", &s, "--widths", "20,20,20", "--out", "m.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("50"));
    let s = write_samples(t.path(), 50);
    let o = kuhnnet(t.path(), &["memorize", "--samples", &s, "--widths", "20,20,20", "--out", "m.json", "--report", "r.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(t.path(), "r.json")["capacity"], 50);
}

#[test]
fn compare_writes_two_rows() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["compare", "--target", "min-coords", "--d", "2", "--n", "3", "--scan-points", "2000", "--pairs", "2000", "--out", "c.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(t.path().join("c.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert_eq!(rows[1][0], "kuhn");
    assert_eq!(rows[2][0], "baseline");
}

#[test]
fn global_build_meets_its_depth() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["build", "--target", "ridge", "--d", "3", "--n", "2", "--global", "--out", "g.json", "--report", "r.json"]);
    assert_eq!(code(&o), 0);
    let r = report(t.path(), "r.json");
    assert!(r["depth"].as_u64().unwrap() <= 2 + 5);
    assert_eq!(r["kind"]["type"], "global");
}

#[test]
fn bound_sweep_has_eleven_rows() {
    let t = TempDir::new().unwrap();
    let o = kuhnnet(t.path(), &["bound", "--depth", "50", "--width", "10000", "--d", "2", "--sweep"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().next(), Some("N,confidence,parameter_term,function_term,bound"));
    assert_eq!(out.lines().count(), 12);
    assert!(String::from_utf8_lossy(&o.stderr).contains("C_dX"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        let s = write_samples(dir, 30);
        kuhnnet(dir, &["memorize", "--samples", &s, "--widths", "20,20,20", "--out", "m.json", "--report", "r.json"]);
        kuhnnet(dir, &["build", "--target", "l1-norm", "--d", "3", "--n", "2", "--shape", "9,9,9", "--out", "n.json", "--report", "b.json"]);
    }
    for f in ["m.json", "r.json", "n.json", "b.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
