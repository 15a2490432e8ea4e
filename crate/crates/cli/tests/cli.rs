use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const LEMMA_Z: &str = r#"
seed = 7

[delone]
kind = "full"
window = "-250:250"

[box]
center = [0]
half_width = 200

[certify]
nsamples = 100
"#;

const WEGNER: &str = r#"
seed = 99

[delone]
kind = "periodic"
window = "-100:400"
k = 3

[disorder]
m = 1.0
law = { kind = "uniform" }

[wegner]
energy = 0.2
etas = [0.05, 0.1]
half_widths = [10, 20]
centers = [[0], [150]]
nsamples = 60
"#;

fn dal(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dal"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env_remove("DAL_THREADS")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lemma_on_full_lattice_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = dal(dir.path(), LEMMA_Z, &["certify-lemma", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = read_json(&out.join("certify_summary.json"));
    let reports = summary["reports"].as_array().unwrap();
    assert!(reports.iter().all(|r| r["pass"] == Value::Bool(true)));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn vacuous_lemma_exits_two_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = LEMMA_Z.replace("half_width = 200", "half_width = 5");
    let res = dal(dir.path(), &config, &["certify-lemma", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("half_width >="));
    let summary = read_json(&out.join("certify_summary.json"));
    assert_eq!(summary["reports"][1]["vacuous"], true);
}

#[test]
fn malformed_key_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = LEMMA_Z.replace("nsamples = 100", "nsamples = 100\nnsample = 3");
    let res = dal(dir.path(), &config, &["certify-lemma", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nsample"));
    assert!(!out.exists());
}

#[test]
fn missing_section_and_bad_override_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(dal(dir.path(), LEMMA_Z, &["wegner", "--out", o]).status.code(), Some(1));
    assert_eq!(
        dal(dir.path(), LEMMA_Z, &["certify-lemma", "--out", o, "--override", "novalue"]).status.code(),
        Some(1)
    );
    assert_eq!(dal(dir.path(), LEMMA_Z, &["no-such-command", "--out", o]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn override_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = dal(
        dir.path(),
        LEMMA_Z,
        &["certify-lemma", "--out", out.to_str().unwrap(), "--override", "box.half_width=190", "--seed", "12"],
    );
    assert_eq!(res.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("certify.csv")).unwrap();
    assert!(csv.contains("L=190"));
    assert_eq!(read_json(&out.join("manifest.json"))["master_seed"], 12);
}

#[test]
fn identical_runs_have_identical_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let checksums = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let res = dal(dir.path(), WEGNER, &["wegner", "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        let manifest = read_json(&out.join("manifest.json"));
        let records: Vec<(String, String)> = manifest["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| (a["name"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
            .collect();
        (records, manifest["config_hash"].clone())
    };
    let a = checksums("a", "1");
    let b = checksums("b", "1");
    let c = checksums("c", "3");
    assert_eq!(a, b);
    assert_eq!(a.0, c.0);
    assert_eq!(a.0.len(), 3);
}
