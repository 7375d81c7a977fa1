use std::fs;
use std::path::Path;
use std::process::Command;

use matchoid_stream::experiment::{run_experiment, Algorithm, ExperimentConfig, OfflineChoice};
use matchoid_stream::generate::GeneratorSpec;

fn randomized_config(dir: &Path, tag: &str, threads: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Algorithm::NonmonotoneRandomized);
    c.generator = Some(GeneratorSpec::DirectedCut {
        n: 10,
        arcs: 25,
        k: 4,
        seed: 8,
    });
    c.epsilon = 0.5;
    c.seed = 99;
    c.replicates = 3;
    c.buffer = Some(2);
    c.threads = Some(threads);
    c.audit = true;
    c.trace = Some(dir.join(format!("{tag}.csv")));
    c.element_trace = Some(dir.join(format!("{tag}.jsonl")));
    c
}

#[test]
fn randomized_traces_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&randomized_config(dir.path(), "a", 1)).unwrap();
    let b = run_experiment(&randomized_config(dir.path(), "b", 1)).unwrap();
    let c = run_experiment(&randomized_config(dir.path(), "c", 4)).unwrap();
    for ext in ["csv", "jsonl"] {
        let ta = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        assert!(!ta.is_empty());
        assert_eq!(ta, fs::read(dir.path().join(format!("b.{ext}"))).unwrap());
        assert_eq!(ta, fs::read(dir.path().join(format!("c.{ext}"))).unwrap());
    }
    assert_eq!(a.replicate_values, b.replicate_values);
    assert_eq!(a.replicate_values, c.replicate_values);
    assert_eq!(a.replicate_values.len(), 3);
    assert!(a.mean.is_some() && a.stddev.is_some());
}

#[test]
fn summary_ratio_matches_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(Algorithm::MonotoneMultipass);
    c.generator = Some(GeneratorSpec::Hypergraph3 {
        vertices: 8,
        edges: 12,
        items: 10,
        seed: 4,
    });
    c.epsilon = 2.0;
    c.trace = Some(dir.path().join("t.csv"));
    let s = run_experiment(&c).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("t.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "f_S").unwrap();
    let last: f64 = rdr.records().last().unwrap().unwrap()[col].parse().unwrap();
    let recomputed = s.opt_value.unwrap() / last;
    assert!((recomputed - s.ratio.unwrap()).abs() <= 1e-9);
    assert_eq!(s.passes, 6);
}

#[test]
fn randomized_summary_ratio_matches_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = randomized_config(dir.path(), "r", 2);
    c.replicates = 1;
    let s = run_experiment(&c).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("r.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let pass = headers.iter().position(|h| h == "pass").unwrap();
    let bar = headers.iter().position(|h| h == "f_S_bar").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let last_pass = rows.iter().map(|r| r[pass].parse::<usize>().unwrap()).max().unwrap();
    let best = rows
        .iter()
        .filter(|r| r[pass].parse::<usize>().unwrap() == last_pass)
        .map(|r| r[bar].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((s.opt_value.unwrap() / best - s.ratio.unwrap()).abs() <= 1e-9);
}

#[test]
fn heuristic_offline_reports_configured_factor() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = randomized_config(dir.path(), "h", 1);
    c.replicates = 1;
    c.offline = OfflineChoice::Heuristic;
    c.gamma_off = Some(2.5);
    c.buffer = None;
    assert_eq!(run_experiment(&c).unwrap().gamma_off, Some(2.5));
}

#[test]
fn cli_end_to_end() {
    let bin = env!("CARGO_BIN_EXE_matchoid-stream");
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let status = Command::new(bin)
        .args(["generate", "--family", "coverage-uniform", "--n", "12", "--k", "3", "--seed", "2", "--out"])
        .arg(&inst)
        .status()
        .unwrap();
    assert!(status.success());

    let summary = dir.path().join("s.json");
    let out = Command::new(bin)
        .args(["run-monotone", "--schedule", "matroid", "--epsilon", "0.5", "--instance"])
        .arg(&inst)
        .arg("--trace")
        .arg(dir.path().join("t.csv"))
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    assert!(s["ratio"].as_f64().unwrap() <= 2.5 + 1e-9);
    assert_eq!(s["schema_version"], 1);

    let exact = Command::new(bin).arg("solve-exact").arg("--instance").arg(&inst).output().unwrap();
    let e: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    assert_eq!(e["opt_value"], s["opt_value"]);

    let rep = Command::new(bin).arg("report").arg(&summary).output().unwrap();
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.starts_with("pass,runs,mean_ratio,max_ratio"));

    let bad = Command::new(bin)
        .args(["generate", "--family", "unknown", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert!(!bad.status.success());

    let missing = Command::new(bin)
        .args(["solve-exact", "--instance"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.json"));
}

#[test]
fn config_file_reproduces_trace() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_matchoid-stream");
    let cfg = randomized_config(dir.path(), "cfg", 1);
    let path = dir.path().join("cfg.json");
    cfg.save(&path).unwrap();
    run_experiment(&cfg).unwrap();
    let first = fs::read(dir.path().join("cfg.csv")).unwrap();
    let out = Command::new(bin).arg("run").arg("--config").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(first, fs::read(dir.path().join("cfg.csv")).unwrap());
}
