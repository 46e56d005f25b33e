use std::process::{Command, Output};

use serde_json::Value;

fn vervaat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vervaat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn schema() -> jsonschema::Validator {
    let raw = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(raw).unwrap()).unwrap()
}

#[test]
fn sample_csv_schema() {
    let out = vervaat(&["sample", "--beta", "1", "--n", "3", "--seed", "7", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.split('\n').collect();
    assert_eq!(lines[0], "index,y_value,steps,d0");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4], "");
    for (i, line) in lines[1..4].iter().enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], i.to_string());
        assert!(f[1].parse::<f64>().unwrap() >= 0.0);
        assert!(f[2].parse::<u64>().unwrap() >= 1);
        assert!(f[3].parse::<u64>().unwrap() >= 4);
    }
    assert!(!text.contains('\r'));
}

#[test]
fn sample_is_reproducible_across_runs_and_threads() {
    let args = ["sample", "--beta", "1", "--n", "2000", "--seed", "7"];
    let a = vervaat(&[&args[..], &["--threads", "1"]].concat()).stdout;
    let b = vervaat(&[&args[..], &["--threads", "1"]].concat()).stdout;
    let c = vervaat(&[&args[..], &["--threads", "4"]].concat()).stdout;
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn sample_json_matches_schema() {
    let out = vervaat(&["sample", "--beta", "0.5", "--n", "5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(schema().is_valid(&v));
    assert_eq!(v["samples"].as_array().unwrap().len(), 5);
}

#[test]
fn sample_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let out = vervaat(&["sample", "--n", "4", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let file = std::fs::read(&path).unwrap();
    assert_eq!(file, vervaat(&["sample", "--n", "4", "--seed", "3"]).stdout);
}

#[test]
fn analyze_reports() {
    let schema = schema();
    let v = json(&vervaat(&["analyze", "--beta", "1", "--truncation", "400"]));
    assert!(schema.is_valid(&v));
    assert_eq!(v["x0"], 5);
    assert_eq!(v["bounds"]["lower"].as_f64(), Some(5.0));
    assert_eq!(v["bounds"]["upper"].as_f64(), Some(15.0));
    let (lo, hi) = (
        v["bracket"]["lower"].as_f64().unwrap(),
        v["bracket"]["upper"].as_f64().unwrap(),
    );
    assert!(lo <= 6.079_126_903_314_681 && 6.079_126_903_314_681 <= hi && hi - lo <= 1e-10);
    assert!((v["c"].as_f64().unwrap() - 1.016).abs() < 1e-3);

    let v = json(&vervaat(&["analyze", "--beta", "0.25"]));
    assert_eq!(v["x0"], 2);

    let v = json(&vervaat(&["analyze", "--beta", "2"]));
    assert!(schema.is_valid(&v));
    assert!((v["bounds"]["lower"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((v["bounds"]["upper"].as_f64().unwrap() - 245.0).abs() < 1e-9);
}

#[test]
fn validate_dickman_passes() {
    let out = vervaat(&["validate", "--beta", "1", "--n", "1000000", "--seed", "1"]);
    let v = json(&out);
    assert!(schema().is_valid(&v));
    assert_eq!(v["pass"], true, "{v:#}");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn argument_errors_exit_2() {
    for args in [
        &["validate", "--beta", "1", "--n", "100"][..],
        &["sample", "--beta", "-1"],
        &["sample", "--beta", "nan"],
        &["sample", "--n", "0"],
        &["sample", "--threads", "0"],
        &["sample", "--bogus"],
        &["trace", "--n", "2"],
        &["analyze", "--format", "csv"],
        &["analyze", "--truncation", "1"],
    ] {
        assert_eq!(vervaat(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn budget_abort_exits_3() {
    let out = vervaat(&["sample", "--beta", "30", "--n", "1", "--threads", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("beta = 30"), "{err}");
}

#[test]
fn trace_matches_sample_and_path_invariants() {
    for seed in ["7", "8", "9", "10"] {
        let trace = stdout(&vervaat(&["trace", "--beta", "1", "--seed", seed]));
        let sample = stdout(&vervaat(&["sample", "--beta", "1", "--n", "1", "--seed", seed]));
        let row: Vec<&str> = sample.lines().nth(1).unwrap().split(',').collect();
        let last = trace.lines().last().unwrap();
        assert_eq!(last, format!("X0 = {}", row[1]));
        assert!(trace.contains(&format!("T = {}\n", row[2])));
        assert!(trace.contains(&format!("D_0 = {}\n", row[3])));

        for line in trace.lines().filter(|l| l.starts_with("step ")) {
            let body = line.split_once(": ").unwrap().1;
            let kv: Vec<(&str, &str)> = body.split(", ").map(|f| f.split_once(" = ").unwrap()).collect();
            let d: u64 = kv[0].1.parse().unwrap();
            assert!(d >= 4, "{line}");
            let u: f64 = kv[2].1.parse().unwrap();
            assert_eq!(u > 2.0 / 3.0, kv[1].1 == "up", "{line}");
        }
    }
}
