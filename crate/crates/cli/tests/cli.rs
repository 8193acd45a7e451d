use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[dataset]
standard_total = 140
train = 90
val = 20
test = 30
uncertain_total = 30

[train]
epochs = 3
hidden = [8]

[active]
rounds = 1
"#;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beliefdrive"))
        .current_dir(dir)
        .arg("--config")
        .arg("small.toml")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = workdir();
    let out = bin(dir.path(), &["gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_checkpoint_is_a_data_error() {
    let dir = workdir();
    ok(&bin(dir.path(), &["gen", "--out", "data", "--seed", "1"]));
    let out = bin(dir.path(), &["eval", "--model", "nope.json", "--data", "data", "--out", "r.json", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
}

#[test]
fn bad_policy_is_rejected() {
    let dir = workdir();
    fs::write(dir.path().join("p.toml"), "final_scale = 0.5\n[[tiers]]\nupper_bits = 2.0\nscale = 1.0\n").unwrap();
    ok(&bin(dir.path(), &["course", "--out", "c.json"]));
    let out = bin(
        dir.path(),
        &["simulate", "--course", "c.json", "--model", "m.json", "--policy", "p.toml", "--out", "t.csv", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn end_to_end_flow_is_reproducible() {
    let dir = workdir();
    let d = dir.path();
    ok(&bin(d, &["gen", "--out", "data", "--seed", "7"]));
    assert!(d.join("data/manifest.json").exists());
    assert!(d.join("data/raster.bin").exists());

    ok(&bin(d, &["train", "--data", "data", "--model-kind", "rsnn", "--out", "m.json", "--log", "train.csv", "--seed", "3"]));
    let log = fs::read_to_string(d.join("train.csv")).unwrap();
    assert!(log.starts_with("# seed=3 config_hash="));

    ok(&bin(d, &["eval", "--model", "m.json", "--data", "data", "--out", "r.json", "--seed", "5"]));
    let first = fs::read(d.join("r.json")).unwrap();
    ok(&bin(d, &["eval", "--model", "m.json", "--data", "data", "--out", "r.json", "--seed", "5"]));
    assert_eq!(first, fs::read(d.join("r.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["confusion_counts"].as_array().unwrap().len(), 7);
    assert!(d.join("r_confusion.csv").exists());

    ok(&bin(d, &["train", "--data", "data", "--model-kind", "rsnn", "--out", "m2.json", "--seed", "4"]));
    ok(&bin(d, &["eval", "--model", "m.json", "--model", "m2.json", "--data", "data", "--out", "agg.json", "--seed", "5"]));
    let agg: serde_json::Value = serde_json::from_slice(&fs::read(d.join("agg.json")).unwrap()).unwrap();
    assert_eq!(agg["aggregate"]["accuracy"]["n"], 2);

    ok(&bin(d, &["plot-eval", "--report", "r.json", "--out-dir", "plots"]));
    assert!(fs::read_to_string(d.join("plots/misclassifications.svg")).unwrap().starts_with("<svg"));

    ok(&bin(d, &["course", "--kind", "corrupted", "--out", "course.json"]));
    let sim = ["simulate", "--course", "course.json", "--model", "m.json", "--seed", "9", "--summary", "s.json"];
    ok(&bin(d, &[&sim[..], &["--out", "t1.csv"]].concat()));
    ok(&bin(d, &[&sim[..], &["--out", "t2.csv"]].concat()));
    let t1 = fs::read(d.join("t1.csv")).unwrap();
    assert_eq!(t1, fs::read(d.join("t2.csv")).unwrap());
    assert!(String::from_utf8_lossy(&t1).starts_with("# seed=9 config_hash="));
    ok(&bin(d, &["plot-trace", "--trace", "t1.csv", "--out", "t.svg"]));
    assert!(fs::read_to_string(d.join("t.svg")).unwrap().contains("<polyline"));

    ok(&bin(d, &["al", "--exp", "2", "--model", "rsnn", "--seeds", "2", "--data", "data", "--out", "al", "--seed", "10"]));
    let csv = fs::read_to_string(d.join("al/exp2_rsnn_seed10.csv")).unwrap();
    assert!(csv.starts_with("# seed=10 "));
    assert_eq!(csv.lines().count(), 4, "comment, header and two rounds");
    ok(&bin(
        d,
        &["plot-al", "--log", "al/exp2_rsnn_seed10.json", "--log", "al/exp2_rsnn_seed11.json", "--out", "al.svg"],
    ));
}

#[test]
fn omitted_seed_is_drawn_and_echoed() {
    let dir = workdir();
    let out = bin(dir.path(), &["gen", "--out", "data"]);
    ok(&out);
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed: u64 = stderr
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed echoed")
        .parse()
        .unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("data/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(seed));
}

#[test]
fn invalid_experiment_is_a_usage_error() {
    let dir = workdir();
    let out = bin(dir.path(), &["al", "--exp", "4", "--out", "al"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn three_class_dataset_feeds_three_class_models() {
    let dir = workdir();
    let d = dir.path();
    ok(&bin(d, &["gen", "--classes", "3", "--out", "data3", "--seed", "2"]));
    ok(&bin(d, &["train", "--data", "data3", "--model-kind", "softmax", "--out", "m3.json", "--seed", "1"]));
    ok(&bin(d, &["eval", "--model", "m3.json", "--data", "data3", "--out", "r3.json", "--seed", "1"]));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("r3.json")).unwrap()).unwrap();
    assert_eq!(report["classes"].as_array().unwrap().len(), 3);
}
