use std::path::Path;
use std::process::{Command, Output};

fn gmp(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gmp"));
    cmd.args(args);
    for kv in [
        format!("data_dir={}", dir.join("data").display()),
        format!("out_dir={}", dir.join("out").display()),
        "task=jmasa".into(),
        "seeds=3".into(),
        "runs_per_seed=1".into(),
        "quota=2,2,1,1,1,0,0".into(),
        "n_test=12".into(),
        "corpus.n_instances=120".into(),
        "d=8".into(),
        "n_heads=2".into(),
        "n_layers=1".into(),
        "d_v=8".into(),
        "l_i=1".into(),
        "epochs=2".into(),
    ] {
        cmd.args(["--set", &kv]);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gmp(d, &["gencorpus"]));
    assert!(d.join("data/train.jsonl").exists() && d.join("data/test.jsonl").exists());

    let report = ok(&gmp(d, &["sample"]));
    assert!(report.contains("seed 3 train"), "{report}");
    assert!(d.join("data/seed_3/dev.jsonl").exists());

    let table = ok(&gmp(d, &["train"]));
    assert!(table.contains("F1"), "{table}");
    let run = d.join("out/runs/seed3_run0");
    for f in ["model.ckpt", "log.tsv", "metrics.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(run.join("log.tsv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_runs"], 1);

    let ckpt = run.join("model.ckpt");
    let json = ok(&gmp(d, &["eval", "--checkpoint", ckpt.to_str().unwrap()]));
    let m: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(m["n_instances"], 12);
    let saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["F1"], saved["F1"]);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gmp")).args(["config", "--set", "lambda=-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = gmp(dir.path(), &["sample"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.jsonl"));
}
