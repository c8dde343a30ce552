use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtsqrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtsqrt"))
        .args(args)
        .output()
        .expect("failed to start qtsqrt")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn example2_fpi_finishes_in_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, r) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("r.json"));
    let out = qtsqrt(&[
        "gen", "--family", "example2", "--s0", "0.5", "--m", "5", "--n", "30", "--p", "2", "--q", "8", "--out", p(&a),
    ]);
    assert_ok(&out);
    let out = qtsqrt(&["sqrt", "--input", p(&a), "--method", "fpi", "--out", p(&b), "--report", p(&r)]);
    assert_ok(&out);

    let report = read_json(&r);
    assert!(report["converged"].as_bool().unwrap());
    assert!(report["solve"]["iterations"].as_u64().unwrap() <= 2);
    assert!(report["solve"]["final_residual"].as_f64().unwrap() <= 1e-13);
    assert_eq!(report["method"], "fpi");

    let root = read_json(&b);
    let diag = root["symbol"]["pos"][0].as_f64().unwrap();
    assert!((diag - (1.0 - 0.5f64.sqrt())).abs() < 1e-14);
}

#[test]
fn example1_sda_and_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (a, csv) = (dir.path().join("a.json"), dir.path().join("runs.csv"));
    assert_ok(&qtsqrt(&[
        "gen", "--family", "example1", "--seed", "4", "--band-neg", "6", "--band-pos", "5", "--corr-dim", "12", "--out", p(&a),
    ]));
    for method in ["sda", "fpi"] {
        let out = qtsqrt(&["sqrt", "--input", p(&a), "--method", method, "--csv", p(&csv)]);
        assert_ok(&out);
        assert!(String::from_utf8_lossy(&out.stdout).contains("converged"));
    }
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[1], "method");
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][col("method")], "sda");
    assert!(rows[0][col("instance")].contains("example1"));
    let it_sda: usize = rows[0][col("iterations")].parse().unwrap();
    let it_fpi: usize = rows[1][col("iterations")].parse().unwrap();
    assert!(it_sda <= 10);
    assert!(it_fpi >= it_sda);
}

#[test]
fn generator_spec_is_accepted_as_input() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"family": "example3", "seed": 2, "p": 3, "q": 2}"#).unwrap();
    let r = dir.path().join("r.json");
    let out = qtsqrt(&["sqrt", "--input", p(&spec), "--method", "truncated-sda", "--report", p(&r)]);
    assert_ok(&out);
    let report = read_json(&r);
    assert!(report["k"].as_u64().unwrap() > 0);
    assert!(report["extension"]["passed"].as_bool().unwrap());
    assert!(report["gamma"].as_f64().unwrap() > 1.0);
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("a{i}.json"))).collect();
    for path in &paths {
        assert_ok(&qtsqrt(&["gen", "--family", "example1", "--seed", "9", "--band-neg", "3", "--band-pos", "4", "--corr-dim", "5", "--out", p(path)]));
    }
    assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
}

#[test]
fn corrupt_input_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"a\": {\"symbol\": ").unwrap();
    let out = qtsqrt(&["sqrt", "--input", p(&bad)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parsing"), "{err}");

    let out = qtsqrt(&["sqrt", "--input", p(&dir.path().join("missing.json"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reading"));
}

#[test]
fn invalid_requests_fail() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    assert_ok(&qtsqrt(&["gen", "--family", "example1", "--seed", "1", "--band-neg", "8", "--band-pos", "8", "--out", p(&a)]));
    // iteration cap too small for fpi
    let out = qtsqrt(&["sqrt", "--input", p(&a), "--method", "fpi", "--max-iter", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no convergence"));

    assert!(!qtsqrt(&["sqrt", "--input", p(&a), "--method", "newton"]).status.success());
    assert!(!qtsqrt(&["gen", "--family", "example2", "--s0", "1.5", "--out", p(&a)]).status.success());
    assert!(!qtsqrt(&["bench", "--suite", "figures", "--out-dir", p(dir.path())]).status.success());
}

#[test]
fn figdata_constant_root() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("b.json");
    fs::write(
        &root,
        r#"{"symbol": {"neg": [], "pos": [0.5]}, "correction": {"rows": 0, "cols": 0, "data": []}, "threshold": 1e-15}"#,
    )
    .unwrap();
    let prefix = dir.path().join("out/fig");
    assert_ok(&qtsqrt(&["figdata", "--input", p(&root), "--out-prefix", p(&prefix)]));
    let pos = fs::read_to_string(dir.path().join("out/fig_symbol_pos.csv")).unwrap();
    let rows: Vec<&str> = pos.lines().collect();
    assert_eq!(rows.len(), 2);
    let (idx, val) = rows[1].split_once(',').unwrap();
    assert_eq!(idx, "0");
    assert!((val.parse::<f64>().unwrap() - 0.5f64.log10()).abs() < 1e-15);
    let heat = fs::read_to_string(dir.path().join("out/fig_correction.csv")).unwrap();
    assert_eq!(heat.lines().count(), 1);
}

#[test]
fn figdata_extent_matches_correction() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, r) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("r.json"));
    assert_ok(&qtsqrt(&["gen", "--family", "example1", "--seed", "2", "--band-neg", "4", "--band-pos", "4", "--corr-dim", "6", "--out", p(&a)]));
    assert_ok(&qtsqrt(&["sqrt", "--input", p(&a), "--method", "sda", "--out", p(&b), "--report", p(&r)]));
    let prefix = dir.path().join("fig");
    assert_ok(&qtsqrt(&["figdata", "--input", p(&b), "--out-prefix", p(&prefix)]));
    let heat = fs::read_to_string(dir.path().join("fig_correction.csv")).unwrap();
    let (mut maxi, mut maxj) = (0, 0);
    for line in heat.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        maxi = maxi.max(f[0].parse::<u64>().unwrap());
        maxj = maxj.max(f[1].parse::<u64>().unwrap());
    }
    let stats = &read_json(&r)["solve"]["stats"];
    assert_eq!(maxi, stats["rows"].as_u64().unwrap());
    assert_eq!(maxj, stats["cols"].as_u64().unwrap());
}
