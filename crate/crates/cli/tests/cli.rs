mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn minerec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minerec")).args(args).output().expect("spawn minerec")
}

fn ok(args: &[&str]) -> String {
    let out = minerec(args);
    assert!(
        out.status.success(),
        "minerec {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn corpus_train_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    let cfg = serde_json::to_string(&common::small_config()).unwrap();
    std::fs::write(&config, cfg).unwrap();
    let corpus = dir.path().join("corpus");
    let sample = common::sample_path();

    let prov = json(&["generate-corpus", "--config", s(&config), "--out", s(&corpus), "--ingest", s(&sample)]);
    assert_eq!(prov["n_logs"], 31);
    assert_eq!(prov["ingested"][0], "ext_orders");
    for f in ["features.csv", "labels.csv", "provenance.json"] {
        assert!(corpus.join(f).exists(), "{f}");
    }

    let bundle = dir.path().join("bundle.json");
    let trained = json(&["train", "--corpus", s(&corpus), "--out", s(&bundle), "--n-trees", "20"]);
    let version = trained["bundle_version"].as_str().unwrap().to_owned();
    assert_eq!(trained["n_logs"], 31);

    let cv = ok(&["cv", "--corpus", s(&corpus), "--k", "3", "--n-trees", "10"]);
    let lines: Vec<&str> = cv.lines().collect();
    assert_eq!(lines.len(), 25);
    assert!(lines[0].starts_with("algorithm,measure,mae"));

    let rec = json(&["recommend", s(&sample), "--bundle", s(&bundle), "--fitness", "70", "--precision", "30", "--generalization", "0", "--simplicity", "0"]);
    assert_eq!(rec["bundle_version"], version.as_str());
    let results = rec["results"].as_array().unwrap();
    assert_eq!(results.len(), 6);
    let scores: Vec<f64> = results.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let exp = json(&["explain", s(&sample), "--algorithm", "heuristics", "--measure", "precision", "--bundle", s(&bundle)]);
    assert_eq!(exp["algorithm"], "heuristics");
    let phi: f64 = exp["items"].as_array().unwrap().iter().map(|a| a["contribution"].as_f64().unwrap()).sum();
    let lhs = exp["prediction"].as_f64().unwrap() - exp["base"].as_f64().unwrap();
    assert!((phi - lhs).abs() < 1e-9, "{phi} vs {lhs}");

    let dot = dir.path().join("net.dot");
    let net = json(&["discover", s(&sample), "--algorithm", "heuristics", "--param", "dependency_threshold=0.5", "--dot", s(&dot)]);
    assert_eq!(net["params"]["dependency_threshold"], 0.5);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let feats = json(&["features", s(&sample)]);
    assert_eq!(feats["features"].as_array().unwrap().len(), 48);
    assert_eq!(feats["log_id"], "4112a461eace1b58");

    let eval = json(&["evaluate", s(&sample)]);
    assert_eq!(eval["log_id"], "4112a461eace1b58");
    assert_eq!(eval["results"].as_array().unwrap().len(), 6);
}

#[test]
fn bad_input_exits_nonzero() {
    let sample = common::sample_path();
    let zero = ["evaluate", s(&sample), "--fitness", "0", "--precision", "0", "--generalization", "0", "--simplicity", "0"];
    let out = minerec(&zero);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let out = minerec(&["evaluate", s(&sample), "--fitness", "-1"]);
    assert!(!out.status.success());

    let out = minerec(&["discover", s(&sample), "--algorithm", "genetic"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnsupportedAlgorithm"));

    let out = minerec(&["features", "/nonexistent.xes"]);
    assert!(!out.status.success());
}
