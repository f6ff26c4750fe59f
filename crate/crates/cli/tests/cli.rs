use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contour-lcu"))
}

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn error_record(o: &Output) -> (i64, String) {
    let v = json_of(o);
    let e = &v["error"];
    (e["code"].as_i64().unwrap(), e["kind"].as_str().unwrap().to_string())
}

fn rows(csv: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8(csv.to_vec()).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn apply_hamiltonian_meets_epsilon() {
    let o = run(&["apply", "--problem", problem("hamiltonian.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v = json_of(&o);
    let eps = v["bounds"]["epsilon"].as_f64().unwrap();
    assert!(v["distance"].as_f64().unwrap() <= eps);
    let p = v["successProbability"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert_eq!(v["state"]["dim"], 2);
    assert!(v["resourceEstimate"]["queriesUA"].as_f64().unwrap() > 0.0);
    assert!(v["diagnostics"]["chain"]["holds"].as_bool().unwrap());
}

#[test]
fn every_sample_problem_applies() {
    for name in ["polynomial.json", "ode-fast-forward.json", "ode-generic.json", "ode-inhomogeneous.json"] {
        let o = run(&["apply", "--problem", problem(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}");
        let v = json_of(&o);
        assert!(v["distance"].as_f64().unwrap() <= v["bounds"]["epsilon"].as_f64().unwrap(), "{name}");
    }
}

#[test]
fn malformed_matrix_is_a_parse_error() {
    let o = run(&["apply", "--problem", data("malformed-matrix.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o), (2, "ParseError".into()));
}

#[test]
fn error_paths_have_records_and_codes() {
    let o = run(&["apply", "--problem", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o).1, "FileNotFound");

    let o = run(&["study", "--study", "no-such-study"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o).1, "UnknownStudy");

    let o = run(&["apply", "--problem", problem("hamiltonian.json").to_str().unwrap(), "--epsilon", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o).1, "InvalidParameter");

    let o = run(&["apply", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o).1, "UsageError");

    let o = run(&["apply", "--problem", problem("hamiltonian.json").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_m_override_warns() {
    let o = run(&["apply", "--problem", problem("hamiltonian.json").to_str().unwrap(), "--M", "64"]);
    assert!(o.status.success());
    let v = json_of(&o);
    assert_eq!(v["diagnostics"]["M"], 64);
    let w: Vec<&str> = v["warnings"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert!(w.contains(&"aprioriBound exceeds budget"), "{w:?}");
}

#[test]
fn out_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("hamiltonian.json");
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let o = run(&["estimate", "--problem", p.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        files.push(std::fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let o = run(&["estimate", "--problem", p.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(o.stdout, files[0]);
}

#[test]
fn estimate_modes() {
    let p = problem("hamiltonian.json");
    for mode in ["exact", "shots"] {
        let o = run(&["estimate", "--problem", p.to_str().unwrap(), "--mode", mode, "--epsilon", "0.2"]);
        assert!(o.status.success());
        let v = json_of(&o);
        let mu = v["estimate"]["mu"].as_f64().unwrap();
        let truth = v["diagnostics"]["truth"].as_f64().unwrap();
        assert!((mu - truth).abs() <= 0.2, "{mode}: {mu} vs {truth}");
        assert_eq!(v["diagnostics"]["ancillaQubits"], 4);
    }
}

#[test]
fn resources_csv_and_json_agree() {
    let p = problem("ode-fast-forward.json");
    let j = json_of(&run(&["resources", "--problem", p.to_str().unwrap()]));
    let c = run(&["resources", "--problem", p.to_str().unwrap(), "--format", "csv"]);
    let r = rows(&c.stdout);
    assert_eq!(r[0][2], "queriesUA");
    let q: f64 = r[1][2].parse().unwrap();
    assert_eq!(q.to_bits(), j["queriesUA"].as_f64().unwrap().to_bits());
}

#[test]
fn quadrature_rate_rows_stay_below_bound() {
    let o = run(&["study", "--study", "quadrature-rate"]);
    assert!(o.status.success());
    let r = rows(&o.stdout);
    assert_eq!(r[0], ["M", "measuredError", "aprioriBound"]);
    assert_eq!(r.len(), 6);
    for row in &r[1..] {
        let e: f64 = row[1].parse().unwrap();
        let b: f64 = row[2].parse().unwrap();
        assert!(e <= b, "{row:?}");
    }
}

#[test]
fn hoeffding_coverage_column() {
    let o = run(&["study", "--study", "hoeffding-coverage", "--trials", "40"]);
    assert!(o.status.success());
    let r = rows(&o.stdout);
    assert_eq!(r.len(), 41);
    let last: f64 = r[40][7].parse().unwrap();
    assert!(last >= 0.81 - 0.07);
}

#[test]
fn ff_time_invariance_column_is_constant() {
    let o = run(&["study", "--study", "ff-ode-time-invariance"]);
    assert!(o.status.success());
    let r = rows(&o.stdout);
    assert_eq!(r[0][1], "queriesUA");
    assert_eq!(r.len(), 4);
    assert!(r[1..].iter().all(|row| row[1] == r[1][1]));
    let g: Vec<f64> = r[1..].iter().map(|row| row[4].parse().unwrap()).collect();
    assert!(g[2] > g[1] && g[1] > g[0]);
}
