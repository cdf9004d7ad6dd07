use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wimotion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wimotion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, per_class: &str, seed: &str) {
    let out = wimotion(&["synth", "--per-class", per_class, "--seed", seed, "--out", path(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_writes_one_file_per_trace() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2", "1");
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 12);
    assert!(names.contains(&"Walk_001.jsonl".to_string()));
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), "1", "7");
    synth(b.path(), "1", "7");
    for e in fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap()
        );
    }
}

#[test]
fn train_predict_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let model = dir.path().join("model.wm");
    synth(&data, "6", "3");

    let out = wimotion(&["train", "--data", path(&data), "--out", path(&model)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config:"));

    let trace = data.join("Squat_002.jsonl");
    let out = wimotion(&["predict", "--model", path(&model), "--in", path(&trace)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["label"], "Squat");
    assert_eq!(v["fused"].as_array().unwrap().len(), 6);

    let report = dir.path().join("report");
    let out = wimotion(&["eval", "--model", path(&model), "--data", path(&data), "--report", path(&report)]);
    assert!(out.status.success());
    assert!(report.join("confusion.csv").exists());
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["accuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn identical_training_runs_give_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, "3", "5");
    let m1 = dir.path().join("a.wm");
    let m2 = dir.path().join("b.wm");
    for m in [&m1, &m2] {
        assert!(wimotion(&["train", "--data", path(&data), "--out", path(m)]).status.success());
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
}

#[test]
fn curve_has_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "8", "2");
    let out = wimotion(&["curve", "--data", path(dir.path()), "--sizes", "2,4,6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    let out = wimotion(&["curve", "--data", path(dir.path()), "--sizes", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_a = dir.path().join("a");
    fs::write(&cfg, format!("per-class = 1\nseed = 4\nout = {:?}\n", path(&out_a))).unwrap();
    let out = wimotion(&["--config", path(&cfg), "synth"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&out_a).unwrap().count(), 6);

    let out = wimotion(&["--config", path(&cfg), "synth", "--per-class", "2"]);
    assert!(out.status.success());
    assert_eq!(fs::read_dir(&out_a).unwrap().count(), 12);

    fs::write(&cfg, "per-klass = 1\n").unwrap();
    assert_eq!(wimotion(&["--config", path(&cfg), "synth"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(wimotion(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(wimotion(&["synth", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(wimotion(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"t\": 0.0}\n").unwrap();
    let model = dir.path().join("m.wm");
    fs::write(&model, "{\"format_version\": 1").unwrap();
    let out = wimotion(&["predict", "--model", path(&model), "--in", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));

    // a dataset lacking a class is a training error
    let data = dir.path().join("data");
    synth(&data, "2", "1");
    for e in fs::read_dir(&data).unwrap() {
        let p = e.unwrap().path();
        if p.file_name().unwrap().to_string_lossy().starts_with("Bend") {
            fs::remove_file(p).unwrap();
        }
    }
    let out = wimotion(&["train", "--data", path(&data), "--out", path(&model)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn convert_dat_to_jsonl() {
    use wimotion::ingest::{read_jsonl, write_dat};
    use wimotion::synth::{generate_trace, ActivityProfile, SyntheticNoise};
    use wimotion::ActivityLabel;

    let dir = tempfile::tempdir().unwrap();
    let trace = generate_trace(
        &ActivityProfile::default_for(ActivityLabel::Walk),
        1,
        &SyntheticNoise::default(),
    )
    .unwrap();
    let dat = dir.path().join("x.dat");
    write_dat(trace.frames(), &dat).unwrap();
    let jsonl = dir.path().join("x.jsonl");
    let out = wimotion(&[
        "convert", "--in", path(&dat), "--out", path(&jsonl), "--label", "Walk", "--subject", "s2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let back = read_jsonl(&jsonl).unwrap();
    assert_eq!(back.len(), trace.len());
    assert_eq!(back.label, Some(ActivityLabel::Walk));
    assert_eq!(back.subject_id.as_deref(), Some("s2"));

    let out = wimotion(&["convert", "--in", path(&dat), "--out", path(&jsonl), "--label", "Jump"]);
    assert_eq!(out.status.code(), Some(1));
}
