use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_catchmap");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_catalog(dir: &Path) -> std::path::PathBuf {
    let (csv, cat) = (dir.join("s.csv"), dir.join("s.cmc"));
    json(&["synth", "--seed", "3", "--expeditions", "40", "--out", p(&csv)]);
    json(&["ingest", "--out", p(&cat), p(&csv)]);
    cat
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let cat = small_catalog(dir.path());
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["bins", "--catalog", p(&cat), "--bin", "7"]).status.code(), Some(1));
    assert_eq!(run(&["stats", "--catalog", p(&cat), "--filter", "species=narwhal"]).status.code(), Some(1));
    assert_eq!(run(&["stats", "--catalog", p(&dir.path().join("missing.cmc"))]).status.code(), Some(3));
    let junk = dir.path().join("junk.cmc");
    std::fs::write(&junk, "not a catalog\n").unwrap();
    assert_eq!(run(&["stats", "--catalog", p(&junk)]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_command_leaves_existing_output_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    std::fs::write(&out, "previous").unwrap();
    let missing = dir.path().join("missing.csv");
    let res = run(&["ingest", "--out", p(&out), p(&missing)]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "previous");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn filtered_export_counts_match_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cat = small_catalog(dir.path());
    let filter = "species=blue,fin&type=pelagic";
    let matched = json(&["stats", "--catalog", p(&cat), "--filter", filter])["matched"].as_u64().unwrap();
    let csv = dir.path().join("sub.csv");
    let back = dir.path().join("sub.cmc");
    ok(&["export", "--catalog", p(&cat), "--filter", filter, "--out", p(&csv)]);
    let report = json(&["ingest", "--mapping", "canonical", "--out", p(&back), p(&csv)]);
    assert_eq!(report["accepted"].as_u64(), Some(matched));
    assert_eq!(report["rejected"].as_u64(), Some(0));
}

#[test]
fn outputs_agree_between_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cat = small_catalog(dir.path());
    let out = dir.path().join("bins.geojson");
    let stdout = run(&["bins", "--catalog", p(&cat), "--bin", "10", "--format", "geojson"]).stdout;
    ok(&["bins", "--catalog", p(&cat), "--bin", "10", "--format", "geojson", "--out", p(&out)]);
    assert_eq!(std::fs::read(&out).unwrap(), stdout);
    let v: Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(v["type"], "FeatureCollection");
}

#[test]
fn serve_config_requires_a_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("serve.toml");
    std::fs::write(&cfg, "port = 0\n").unwrap();
    assert_eq!(run(&["serve", "--config", p(&cfg)]).status.code(), Some(1));
    std::fs::write(&cfg, "colour = 1\n").unwrap();
    assert_eq!(run(&["serve", "--config", p(&cfg)]).status.code(), Some(1));
}

#[test]
fn precompute_writes_one_file_per_product() {
    let dir = tempfile::tempdir().unwrap();
    let cat = small_catalog(dir.path());
    let out = dir.path().join("derived");
    let summary = json(&["precompute", "--catalog", p(&cat), "--out-dir", p(&out), "--bins", "5,10", "--filter", "species=blue"]);
    let files: Vec<&str> = summary["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(files, ["bins_5deg.json", "effort_5deg.json", "bins_10deg.json", "effort_10deg.json", "routes.geojson", "timeline.json"]);
    let bins: Value = serde_json::from_slice(&std::fs::read(out.join("bins_10deg.json")).unwrap()).unwrap();
    assert_eq!(bins["total"], summary["matched"]);
    assert_eq!(run(&["precompute", "--catalog", p(&cat), "--out-dir", p(&out), "--bins", "3"]).status.code(), Some(1));
}
