use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/sample_urls.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urlsentry")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = run(&["train", "--data", s(&sample()), "--model", s(&model), "--features", "raw", "--classifier", "knn"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("K-NN"));
    assert!(stdout.contains("seed: 42"));

    let o = run(&[
        "predict",
        "--model",
        s(&model),
        "--out",
        s(dir.path()),
        "http://203.0.113.9/bins/x.arm7",
        "https://www.example.org/about",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = String::from_utf8_lossy(&o.stdout).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        let parts: Vec<&str> = l.split('\t').collect();
        assert_eq!(parts.len(), 3);
        let c: f64 = parts[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&c));
        assert!(parts[2] == "safe" || parts[2] == "flagged");
    }
    let safe = std::fs::read_to_string(dir.path().join("safe_urls.txt")).unwrap();
    let n_safe = lines.iter().filter(|l| l.ends_with("\tsafe")).count();
    assert_eq!(safe.lines().count(), n_safe);
}

#[test]
fn unknown_label_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "url,type\nhttp://a.com,benign\nhttp://b.com,spam\n").unwrap();
    let o = run(&["train", "--data", s(&csv), "--model", s(&dir.path().join("m.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("UnknownLabel"), "{err}");
    assert!(err.contains("load"), "{err}");
}

#[test]
fn empty_url_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = run(&["train", "--data", s(&sample()), "--model", s(&model), "--features", "raw", "--classifier", "knn"]);
    assert_eq!(o.status.code(), Some(0));
    let urls = dir.path().join("urls.txt");
    std::fs::write(&urls, "").unwrap();
    let o = run(&["predict", "--model", s(&model), "--urls", s(&urls), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no URLs"));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let o = run(&["train", "--data", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FileNotFound"));
}

#[test]
fn bad_flag_values_are_rejected() {
    assert_eq!(run(&["train", "--data", "x", "--classifier", "svm"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--data", "x", "--features", "pixels"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--data", "x", "--classifier", "all"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn training_is_reproducible_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for m in [&a, &b] {
        let o = run(&["train", "--data", s(&sample()), "--model", s(m), "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let strip = |p: &Path| -> String {
        std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.contains("\"created_unix\"")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nseed = 3\nfeatures = raw\nclassifier = rf\nrf_trees = 5\n").unwrap();
    let model = dir.path().join("m.json");
    let o = run(&["train", "--config", s(&cfg), "--data", s(&sample()), "--model", s(&model), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("Random Forest"));
    assert!(out.contains("seed: 11"));
}

#[test]
fn compare_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.cfg");
    std::fs::write(&cfg, "features = raw\nrf_trees = 10\ngb_rounds = 20\nxgb_rounds = 20\nmlp_epochs = 20\n").unwrap();
    let out = dir.path().join("cmp");
    let o = run(&["compare", "--config", s(&cfg), "--data", s(&sample()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    std::fs::remove_file(out.join("accuracy.svg")).unwrap();
    let o = run(&["report", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("accuracy.svg")).unwrap();
    assert_eq!(svg.matches("<rect class=\"bar\"").count(), 5);
}
