use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rqc-purity"));
    c.env("RQC_PURITY_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn single_edge_json() {
    let o = run(&["single-edge", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["mean"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert!((v["variance"].as_f64().unwrap() - 0.6 / 35.0).abs() < 1e-12);
    assert_eq!(v["config"]["command"], "single-edge");
}

#[test]
fn validation_and_capacity_exit_codes() {
    assert_eq!(run(&["rem", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["single-edge", "--d", "1"]).status.code(), Some(2));
    assert_eq!(run(&["rem-complete", "--n", "70", "--na", "3"]).status.code(), Some(3));
    assert_eq!(run(&["rem-complete", "--n", "10", "--na", "11"]).status.code(), Some(2));
}

#[test]
fn malformed_graph_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", r#"{"n": 3, "d": 2, "edges": [[0, 5]]}"#);
    let p = write(dir.path(), "p.json", r#"{"A": [0]}"#);
    let out = dir.path().join("series.csv");
    let o = run(&["evolve", "--graph", &g, "--partition", &p, "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vertex 5"));
    assert!(!out.exists());

    let g = write(dir.path(), "g2.json", r#"{"n": 3, "d": 2, "edges": [[0, 1]], "extra": 1}"#);
    let o = run(&["evolve", "--graph", &g, "--partition", &p, "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn evolve_csv_and_fixed_sequence() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", r#"{"n": 3, "d": 2, "edges": [[0, 1], [1, 2]]}"#);
    let p = write(dir.path(), "p.json", r#"{"A": [0]}"#);
    let o = run(&["evolve", "--graph", &g, "--partition", &p, "--k", "2", "--process", "fixed", "--sequence", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][1], "4");
    // gate on (1,2) leaves A alone, then (0,1) acts with a mixed partner
    assert!((rows[2][2].parse::<f64>().unwrap() - 0.72).abs() < 1e-12);
}

#[test]
fn gap_scan_csv_and_fit_file() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("gap.csv");
    let fit_path = dir.path().join("fit.json");
    let o = run(&[
        "gap-scan",
        "--n-min",
        "8",
        "--n-max",
        "20",
        "--step",
        "4",
        "--out",
        csv_path.to_str().unwrap(),
        "--fit-out",
        fit_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["n", "delta", "norm_product", "k_min", "k_emp"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let k_min: u64 = row[3].parse().unwrap();
        let k_emp: u64 = row[4].parse().unwrap();
        assert!(k_min >= k_emp);
    }
    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert!(fits["fits"]["delta_loglog"]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn rem_complete_plateau() {
    let o = run(&["rem-complete", "--n", "10", "--na", "5", "--k", "400", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let values = v["series"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 401);
    assert!((values[400].as_f64().unwrap() - 64.0 / 1025.0).abs() < 1e-6);
}

#[test]
fn oracle_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", r#"{"n": 2, "d": 2, "edges": [[0, 1]]}"#);
    let p = write(dir.path(), "p.json", r#"{"A": [0]}"#);
    let args = ["oracle", "--graph", &g, "--partition", &p, "--k", "1", "--samples", "600", "--seed", "7"];
    let a = stdout(&run(&args));
    let b = stdout(&bin().env("RQC_PURITY_THREADS", "1").args(args).output().unwrap());
    assert_eq!(a, b);
}

#[test]
fn reproduce_quick_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rep");
    let o = run(&["reproduce-all", "--quick", "--outdir", out.to_str().unwrap()]);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let passes = report.lines().filter(|l| l.starts_with("PASS")).count();
    assert!(passes >= 12, "{report}");
    assert!(!report.lines().any(|l| l.starts_with("FAIL")), "{report}");
    assert_eq!(o.status.code(), Some(0));
    for table in ["pur10", "boundfig", "asymptotic", "lambda_saturation"] {
        assert!(out.join(format!("{table}.csv")).exists(), "{table}");
    }
}
