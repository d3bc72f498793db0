use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use algotag::corpus::{write_corpus, Problem};
use algotag::synthetic::{keyword_problems, SignalField};

fn algotag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algotag"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = algotag(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Raw dump of 160 keyword problems over 4 classes plus two records the
/// filter has to deal with.
fn raw_dump(dir: &Path) -> PathBuf {
    let mut problems = keyword_problems(160, 4, SignalField::Statement, 11);
    let mut only_special = problems[0].clone();
    only_special.id = "special-only".into();
    only_special.tags = ["*special".to_string()].into();
    problems.push(only_special);
    problems[1].tags.insert("*special".into());
    let path = dir.join("raw.jsonl");
    write_corpus(&path, &problems).unwrap();
    path
}

fn dataset(dir: &Path) -> PathBuf {
    let raw = raw_dump(dir);
    let out = dir.join("ds");
    ok(&[
        "build-dataset",
        "--corpus",
        s(&raw),
        "--kind",
        "multiclass",
        "--top-k",
        "4",
        "--source-top-k",
        "4",
        "--out",
        s(&out),
    ]);
    out
}

#[test]
fn ingest_filters_and_records_source() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = raw_dump(tmp.path());
    let out = tmp.path().join("clean/corpus.jsonl");
    let text = ok(&["ingest", "--raw", s(&raw), "--out", s(&out)]);
    assert!(text.contains("read 161 problems, kept 160"), "{text}");
    let kept = algotag::corpus::parse_corpus(&out).unwrap();
    assert!(kept.iter().all(|p: &Problem| !p.tags.contains("*special")));
    let sidecar: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("clean/corpus.jsonl.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["kept_problems"], 160);
    assert_eq!(sidecar["source_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn build_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(tmp.path());
    let text = ok(&["stats", "--dataset", s(&ds)]);
    assert!(text.contains("problems") && text.contains("160"), "{text}");
    let json = ok(&["--format", "structured", "stats", "--dataset", s(&ds)]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["n_classes"], 4);
    assert_eq!(v["label_cardinality"], 1.0);
}

#[test]
fn train_is_deterministic_and_predicts_one_tag() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(tmp.path());
    let mut artifacts = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run).join("svm.json");
        ok(&[
            "--seed",
            "7",
            "train",
            "--dataset",
            s(&ds),
            "--model",
            "svm",
            "--folds",
            "3",
            "--out",
            s(&out),
        ]);
        artifacts.push((
            fs::read(&out).unwrap(),
            fs::read(tmp.path().join(run).join("svm.report.json")).unwrap(),
        ));
    }
    assert_eq!(artifacts[0], artifacts[1]);

    let problem = keyword_problems(1, 4, SignalField::Statement, 99).remove(0);
    let mut value = serde_json::to_value(&problem).unwrap();
    value.as_object_mut().unwrap().remove("tags");
    let problem_path = tmp.path().join("problem.json");
    fs::write(&problem_path, value.to_string()).unwrap();
    let artifact = tmp.path().join("a/svm.json");
    let json = ok(&[
        "--format",
        "structured",
        "predict",
        "--artifact",
        s(&artifact),
        "--problem",
        s(&problem_path),
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let tags = v[0]["tags"].as_array().unwrap();
    assert_eq!(tags.len(), 1);
    assert_eq!(tags[0], "class0");

    let report = ok(&["evaluate", "--dataset", s(&ds), "--artifact", s(&artifact)]);
    assert!(report.contains("accuracy"), "{report}");

    let rerun = algotag(&[
        "rerun",
        "--manifest",
        s(&tmp.path().join("a/svm.manifest.json")),
    ]);
    assert!(
        rerun.status.success(),
        "{}",
        String::from_utf8_lossy(&rerun.stderr)
    );
}

#[test]
fn ablation_reruns_identically_and_detects_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(tmp.path());
    let out = tmp.path().join("ablation");
    ok(&[
        "ablate",
        "--dataset",
        s(&ds),
        "--model",
        "mnb",
        "--folds",
        "4",
        "--part",
        "statement",
        "--out",
        s(&out),
    ]);
    for f in [
        "manifest.json",
        "report.json",
        "report.txt",
        "confusion.txt",
        "confusion.svg",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest = out.join("manifest.json");
    assert!(algotag(&["rerun", "--manifest", s(&manifest)])
        .status
        .success());

    let report = out.join("report.json");
    let text = fs::read_to_string(&report).unwrap();
    fs::write(
        &report,
        text.replacen("\"part\": \"statement_only\"", "\"part\": \"full\"", 1),
    )
    .unwrap();
    let rerun = algotag(&["rerun", "--manifest", s(&manifest)]);
    assert_eq!(rerun.status.code(), Some(1));
}

#[test]
fn curve_and_baseline_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(tmp.path());
    let curve = tmp.path().join("curve");
    ok(&[
        "curve",
        "--dataset",
        s(&ds),
        "--model",
        "svm",
        "--folds",
        "3",
        "--fractions",
        "50,100",
        "--out",
        s(&curve),
    ]);
    assert!(fs::read_to_string(curve.join("curve.svg"))
        .unwrap()
        .starts_with("<svg"));
    let base = tmp.path().join("base");
    let text = ok(&[
        "baseline-random",
        "--dataset",
        s(&ds),
        "--model",
        "svm",
        "--folds",
        "3",
        "--out",
        s(&base),
    ]);
    assert!(text.contains("random labels"), "{text}");
}

#[test]
fn tune_reports_the_best_grid_value() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(tmp.path());
    let text = ok(&[
        "tune",
        "--dataset",
        s(&ds),
        "--model",
        "mnb",
        "--folds",
        "3",
    ]);
    assert!(text.contains("best alpha = "), "{text}");
    let json = ok(&[
        "--format",
        "structured",
        "tune",
        "--dataset",
        s(&ds),
        "--model",
        "svm",
        "--folds",
        "3",
        "--grid",
        "0.001,0.1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["parameter"], "reg");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    let out = algotag(&[
        "tune",
        "--dataset",
        s(&ds),
        "--model",
        "cnn",
        "--folds",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes_follow_error_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{not json}\n").unwrap();
    let out = algotag(&[
        "ingest",
        "--raw",
        s(&bad),
        "--out",
        s(&tmp.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let ds = dataset(tmp.path());
    let raw = tmp.path().join("raw.jsonl");
    let out = algotag(&[
        "build-dataset",
        "--corpus",
        s(&raw),
        "--kind",
        "balanced",
        "--top-k",
        "2",
        "--out",
        s(&tmp.path().join("b")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = algotag(&[
        "ablate",
        "--dataset",
        s(&ds),
        "--model",
        "svm",
        "--folds",
        "1",
        "--part",
        "full",
        "--out",
        s(&tmp.path().join("c")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = algotag(&[
        "train",
        "--dataset",
        s(&ds),
        "--model",
        "mlp",
        "--folds",
        "1",
        "--hidden",
        "8",
        "--epochs",
        "3",
        "--learning-rate",
        "1e300",
        "--out",
        s(&tmp.path().join("m.json")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
