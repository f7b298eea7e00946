//! End-to-end runs of the `lindblad` binary.

use std::path::Path;
use std::process::{Command, Output};

use lindblad_learn::features::read_feature_jsonl;
use lindblad_learn::models::ModelId;
use lindblad_learn::nn::{Metrics, RegressorConfig};

fn lindblad(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lindblad"))
        .args(args)
        .current_dir(dir)
        .env_remove("LINDBLAD_PROBE_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn lindblad")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = lindblad(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn pipeline_composes_for_every_model() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for id in ModelId::ALL {
        let m = id.as_str();
        let (data, feats, ckpt, report) =
            (format!("{m}.jsonl"), format!("{m}.f.jsonl"), format!("{m}.ckpt.json"), format!("{m}-report"));
        let set = RegressorConfig::for_model(id).feature_set.as_str();
        ok(&["generate", "--model", m, "--n", "50", "--seed", "5", "--out", &data], dir);
        ok(&["features", "--in", &data, "--set", set, "--out", &feats], dir);
        ok(
            &["train", "--features", &feats, "--model-id", m, "--config", r#"{"max_epochs": 2}"#, "--out-ckpt", &ckpt],
            dir,
        );
        ok(&["eval", "--ckpt", &ckpt, "--features", &feats, "--report-dir", &report], dir);

        let metrics: Metrics = serde_json::from_str(&read(dir, &format!("{report}/metrics.json"))).unwrap();
        assert_eq!(metrics.n_test, 10, "{m}");
        assert_eq!(metrics.targets.len(), id.target_count());
        for name in id.target_names() {
            let csv = read(dir, &format!("{report}/scatter_{name}.csv"));
            assert!(csv.starts_with("sample_id,true,predicted\n"));
            assert_eq!(csv.lines().count(), 11);
        }
        for side in [&data, &feats, &ckpt] {
            assert!(dir.join(format!("{side}.config.json")).exists());
        }
    }

    let width = |name: &str| read_feature_jsonl(&dir.join(name)).unwrap()[0].features.len();
    ok(&["features", "--in", "heisenberg.jsonl", "--set", "f10", "--out", "h10.jsonl"], dir);
    assert_eq!(width("h10.jsonl"), 60);
    ok(&["features", "--in", "jc.jsonl", "--set", "f18", "--out", "jc18.jsonl"], dir);
    assert_eq!(width("jc18.jsonl"), 90);
}

#[test]
fn simulate_writes_observable_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["simulate", "--model", "sq-const", "--seed", "1", "--out", "a"], dir);
    let csv = read(dir, "a/trajectory.csv");
    assert_eq!(csv.lines().next(), Some("time,sz"));
    assert_eq!(csv.lines().count(), 101);
    assert!(dir.join("a/sample.jsonl").exists());

    ok(&["simulate", "--model", "jc", "--seed", "2", "--out", "b", "--params", r#"{"fock_dim": 12}"#], dir);
    assert_eq!(read(dir, "b/trajectory.csv").lines().next(), Some("time,sx,sy,sz,n_phot,x_sz"));
    let cfg: serde_json::Value = serde_json::from_str(&read(dir, "b/run_config.json")).unwrap();
    assert_eq!(cfg["fock_dim"], 12);
    assert_eq!(cfg["seed"], 2);

    // rerunning with the same flags is bit-identical
    ok(&["simulate", "--model", "jc", "--seed", "2", "--out", "c", "--params", r#"{"fock_dim": 12}"#], dir);
    assert_eq!(read(dir, "b/sample.jsonl"), read(dir, "c/sample.jsonl"));
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let bad = lindblad(&["simulate", "--model", "qutrit", "--out", "x"], dir);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Usage"));

    ok(&["generate", "--model", "sq-const", "--n", "3", "--out", "d.jsonl"], dir);
    let missing = lindblad(&["invert", "--in", "d.jsonl", "--method", "t2", "--out", "i.csv"], dir);
    assert_eq!(missing.status.code(), Some(3));

    std::fs::write(dir.join("broken.jsonl"), "{\"sample_id\": 1}\n").unwrap();
    let broken = lindblad(&["features", "--in", "broken.jsonl", "--out", "f.jsonl"], dir);
    assert_eq!(broken.status.code(), Some(3));
}

#[test]
fn generation_ignores_worker_count_and_honours_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["generate", "--model", "sq-td-two", "--n", "12", "--seed", "9", "--out", "one.jsonl"], dir);
    ok(
        &["generate", "--model", "sq-td-two", "--n", "12", "--seed", "9", "--workers", "3", "--out", "three.jsonl"],
        dir,
    );
    assert_eq!(read(dir, "one.jsonl"), read(dir, "three.jsonl"));

    let probed = Command::new(env!("CARGO_BIN_EXE_lindblad"))
        .args(["generate", "--model", "sq-td-two", "--n", "12", "--seed", "1", "--out", "probe.jsonl"])
        .current_dir(dir)
        .env("LINDBLAD_PROBE_SEED", "9")
        .output()
        .unwrap();
    assert!(probed.status.success());
    assert_eq!(read(dir, "one.jsonl"), read(dir, "probe.jsonl"));
}

#[test]
fn invert_emits_estimates_with_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["generate", "--model", "sq-const-two", "--n", "2", "--seed", "4", "--out", "d.jsonl"], dir);
    ok(&["invert", "--in", "d.jsonl", "--method", "t2", "--sample-id", "1", "--out", "t2.csv"], dir);
    let csv = read(dir, "t2.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,estimate,true_value,valid_flag,rate"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 98);
    for r in rows.iter().filter(|r| r[3] == "1") {
        let (est, truth): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((est - truth).abs() <= 0.02 * truth.max(0.05), "{r:?}");
    }
    let cfg: serde_json::Value = serde_json::from_str(&read(dir, "t2.csv.config.json")).unwrap();
    assert_eq!(cfg["sample_id"], 1);
    assert_eq!(cfg["method"], "t2");
}
