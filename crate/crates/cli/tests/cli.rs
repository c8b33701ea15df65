use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stormcast"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "stormcast {args:?} failed");
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic corpus: images and Kp file under `dir/corpus`.
fn corpus(dir: &Path, days: usize) -> (PathBuf, PathBuf) {
    let c = dir.join("corpus");
    ok(&["synth", "--out", s(&c), "--days", &days.to_string(), "--seed", "5"]);
    (c.join("images"), c.join("kp.txt"))
}

#[test]
fn predict_on_bundled_fixtures() {
    let model = fixture("synthetic_model.txt");
    let stormy = ok(&[
        "predict",
        "--model",
        &model,
        "--today",
        &fixture("stormy_today.png"),
        "--yesterday",
        &fixture("stormy_yesterday.png"),
    ]);
    assert!(stormy.starts_with("storm "), "{stormy}");
    let calm = ok(&[
        "predict",
        "--model",
        &model,
        "--today",
        &fixture("calm_today.png"),
        "--yesterday",
        &fixture("calm_yesterday.png"),
    ]);
    assert!(calm.starts_with("no_storm "), "{calm}");
}

#[test]
fn train_and_evaluate_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (images, kp) = corpus(dir.path(), 30);
    let features = dir.path().join("features.csv");
    let dataset = dir.path().join("dataset.csv");
    ok(&["extract", "--images", s(&images), "--out", s(&features)]);
    ok(&["dataset", "--features", s(&features), "--kp", s(&kp), "--out", s(&dataset)]);

    let m1 = dir.path().join("m1.txt");
    let m2 = dir.path().join("m2.txt");
    let out = ok(&["train", "--dataset", s(&dataset), "--model", s(&m1)]);
    assert!(out.contains("before SMOTE") && out.contains("after SMOTE"), "{out}");
    ok(&["train", "--dataset", s(&dataset), "--model", s(&m2)]);
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());

    let r1 = dir.path().join("r1");
    let r2 = dir.path().join("r2");
    let table = ok(&["evaluate", "--model", s(&m1), "--dataset", s(&dataset), "--out", s(&r1)]);
    assert!(table.contains("G-SVM"));
    ok(&["evaluate", "--model", s(&m2), "--dataset", s(&dataset), "--out", s(&r2)]);
    for f in ["report.json", "roc.csv", "table.txt"] {
        assert_eq!(std::fs::read(r1.join(f)).unwrap(), std::fs::read(r2.join(f)).unwrap(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(r1.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 42);
    assert_eq!(report["inputs"]["dataset"].as_str().unwrap().len(), 64);
    assert!(std::fs::read_to_string(r1.join("roc.csv")).unwrap().starts_with("fpr,tpr\n0,0\n"));

    // another seed gives another split and model
    let m3 = dir.path().join("m3.txt");
    ok(&["--set", "seed=43", "train", "--dataset", s(&dataset), "--model", s(&m3)]);
    assert_ne!(std::fs::read(&m1).unwrap(), std::fs::read(&m3).unwrap());
}

#[test]
fn extract_resumes_to_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (images, _) = corpus(dir.path(), 9);
    let whole = dir.path().join("whole.csv");
    let parts = dir.path().join("parts.csv");
    ok(&["extract", "--images", s(&images), "--out", s(&whole)]);
    let first = ok(&["--set", "extract_chunk=2", "extract", "--images", s(&images), "--out", s(&parts), "--limit", "4"]);
    assert!(first.starts_with("4 extracted, 0 already present"), "{first}");
    let second = ok(&["extract", "--images", s(&images), "--out", s(&parts)]);
    assert!(second.starts_with("5 extracted, 4 already present"), "{second}");
    assert_eq!(std::fs::read(&whole).unwrap(), std::fs::read(&parts).unwrap());
    let third = ok(&["extract", "--images", s(&images), "--out", s(&parts)]);
    assert!(third.starts_with("0 extracted, 9 already present"), "{third}");
}

#[test]
fn debug_dir_gets_stage_images() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::copy(fixture("stormy_today.png"), images.join("20140301_000000_1024_HMIIF.png")).unwrap();
    let dbg = dir.path().join("dbg");
    ok(&["extract", "--images", s(&images), "--out", s(&dir.path().join("f.csv")), "--debug-dir", s(&dbg)]);
    for stage in ["smoothed", "magnitude", "suppressed", "edges", "contours", "regions"] {
        assert!(dbg.join(format!("20140301_{stage}.png")).is_file(), "{stage}");
    }
    let csv = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert_eq!(csv, "date,sunspots,regions\n2014-03-01,8,3\n");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(1));
    assert_eq!(code(&["--set", "svm.c=-1", "train"]), Some(1));
    assert_eq!(code(&["--set", "svm.nonsense=1", "train"]), Some(1));
    assert_eq!(code(&["train", "--dataset", "/nonexistent/dataset.csv"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,dataset\n1,2\n").unwrap();
    let out = bin().args(["train", "--dataset", s(&bad), "--model", s(&dir.path().join("m"))]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(!dir.path().join("m").exists());
}

#[test]
fn offline_fetch_without_cache_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--offline", "--set", &format!("paths.cache={}", dir.path().display())])
        .args(["fetch", "--start", "2012-03-01", "--end", "2012-03-03"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
