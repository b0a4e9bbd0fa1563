use std::path::Path;
use std::process::{Command, Output};

fn amra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amra"))
        .args(args)
        .env_remove("AMRA_CACHE_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = amra(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pattern_transform_sparsity() {
    let tmp = tempfile::tempdir().unwrap();
    let pat = tmp.path().join("board.amra");
    ok(&["pattern", "--kind", "iso-squares", "--n", "64", "--grid", "2", "--out", p(&pat)]);

    let csv = tmp.path().join("counts.csv");
    ok(&["sparsity", "--spec", "kind=dwt,wavelet=haar,level=full", "--in", p(&pat), "--out", p(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().count() > 1);

    let coeffs = tmp.path().join("c.amra");
    let back = tmp.path().join("back.amra");
    ok(&["transform", "--spec", "kind=samplet,m=2,level=2", "--in", p(&pat), "--out", p(&coeffs)]);
    ok(&["transform", "--inverse", "--in", p(&coeffs), "--out", p(&back)]);
    assert!(back.exists());
}

#[test]
fn synth_manifest_train_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["synth", "--per-class", "12", "--size", "16", "--out", p(&data)]);

    let manifest = tmp.path().join("all.jsonl");
    let report = ok(&[
        "manifest",
        "--class",
        p(&data.join("real")),
        p(&data.join("fake")),
        "--out",
        p(&manifest),
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["entries"], 24);

    let out = tmp.path().join("run");
    let spec = "kind=fswt,wavelet=haar,level=2";
    let summary = ok(&[
        "--jobs",
        "2",
        "train",
        "--spec",
        spec,
        "--manifest",
        p(&manifest),
        "--size",
        "16",
        "--seeds",
        "0,1",
        "--epochs",
        "1",
        "--batch",
        "8",
        "--out",
        p(&out),
    ]);
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert!(out.join("seed1/manifest.json").exists());
    assert!(out.join("seed0/history.csv").exists());

    let records = tmp.path().join("records.csv");
    let cache = tmp.path().join("cache");
    let eval = ok(&[
        "evaluate",
        "--spec",
        spec,
        "--manifest",
        p(&manifest),
        "--size",
        "16",
        "--checkpoint",
        p(&out.join("seed0")),
        "--perturb",
        "seed=0",
        "--cache-dir",
        p(&cache),
        "--records",
        p(&records),
    ]);
    let eval: serde_json::Value = serde_json::from_str(&eval).unwrap();
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&acc));
    assert_eq!(std::fs::read_to_string(&records).unwrap().lines().count(), 25);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = amra(&["transform", "--spec", "kind=dwt,wavelet=db42", "--in", "x.png", "--out", "y.amra"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("db42"));

    let missing = tmp.path().join("missing.png");
    let out = amra(&["sparsity", "--spec", "kind=dct", "--in", p(&missing)]);
    assert_eq!(out.status.code(), Some(1));

    let help = ok(&["train", "--help"]);
    assert!(help.contains("kind="));
}
