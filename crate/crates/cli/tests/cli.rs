use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use docforge::features::vector_len;
use docforge::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn docforge(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_docforge"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    out
}

fn ok(args: &[&str]) -> Output {
    let out = docforge(args);
    assert!(
        out.status.success(),
        "{args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails(args: &[&str]) -> String {
    let out = docforge(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three rendered pages shared by every test.
fn pages() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        ok(&["render", "--pages", "3", "--seed", "4", "--out", s(dir.path())]);
        dir
    })
    .path()
}

/// Builds a corpus with TSV files from the shared pages.
fn corpus(dir: &Path, prob: &str) -> PathBuf {
    let corpus = dir.join("corpus");
    let sources = pages().join("pages.json");
    ok(&[
        "synth", "--input", s(&sources), "--spec", "shift", "--range", "5", "10", "--prob", prob,
        "--test-fraction", "0.34", "--seed", "2", "--out", s(&corpus),
    ]);
    ok(&["ocr", "--corpus", s(&corpus), "--sources", s(&sources), "--out", s(&corpus)]);
    corpus
}

fn planted(rows: usize, n: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = FeatureMatrix::new(n);
    for i in 0..rows {
        let y = u8::from(rng.random_bool(0.2));
        for c in 0..vector_len(n) {
            let noise: f64 = rng.random_range(0.0..1.0);
            m.values.push(if c == 5 { f64::from(y) + 0.9 * noise } else { noise });
        }
        m.labels.push(y);
        m.page_index.push(0);
        m.box_index.push(i);
        m.glyphs.push('a');
    }
    m
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn probability_outside_unit_interval_is_rejected() {
    let dir = TempDir::new().unwrap();
    let sources = pages().join("pages.json");
    let err = fails(&[
        "synth", "--input", s(&sources), "--spec", "shift", "--range", "1", "5", "--prob", "1.5",
        "--out", s(dir.path()),
    ]);
    assert!(err.contains("probability"), "{err}");
}

#[test]
fn synth_is_deterministic() {
    let sources = pages().join("pages.json");
    let dirs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for d in &dirs {
        ok(&[
            "synth", "--input", s(&sources), "--spec", "scale", "--range", "0.07", "0.14", "--seed", "8",
            "--out", s(d.path()),
        ]);
    }
    for file in ["manifest.json", "train/truth.json", "test/truth.json", "train/page0000.png"] {
        let a = fs::read(dirs[0].path().join(file)).unwrap();
        let b = fs::read(dirs[1].path().join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn perfect_predictions_score_one() {
    let dir = TempDir::new().unwrap();
    let preds = dir.path().join("preds.csv");
    let mut text = String::from("label,prediction\n");
    for i in 0..40 {
        let y = u8::from(i % 4 == 0);
        text.push_str(&format!("{y},{y}\n"));
    }
    fs::write(&preds, text).unwrap();
    let out = ok(&["evaluate", "--predictions", s(&preds), "--out", s(dir.path())]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1.0000"), "{stdout}");
    let metrics = json(&dir.path().join("metrics.json"));
    for k in ["precision", "recall", "accuracy", "f1"] {
        assert_eq!(metrics["overall"][k], 1.0);
    }
}

#[test]
fn search_writes_one_row_per_fold_and_iteration() {
    let dir = TempDir::new().unwrap();
    let features = dir.path().join("features.csv");
    planted(200, 1, 3).save(&features).unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"n_trees":[3,5],"max_depth":[2,4],"min_samples_leaf":[1,4],"n_neighbors":[1],"balanced":[false]}"#,
    )
    .unwrap();
    ok(&[
        "search", "--features", s(&features), "--grid", s(&grid), "--iterations", "7", "--folds", "3",
        "--out", s(dir.path()),
    ]);
    let csv = fs::read_to_string(dir.path().join("candidates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 3);
}

#[test]
fn schema_mismatch_is_an_error() {
    let dir = TempDir::new().unwrap();
    let (n3, n5) = (dir.path().join("n3.csv"), dir.path().join("n5.csv"));
    planted(100, 3, 1).save(&n3).unwrap();
    planted(100, 5, 1).save(&n5).unwrap();
    ok(&["train", "--features", s(&n3), "--trees", "3", "--out", s(dir.path())]);
    let model = dir.path().join("model.dfrf");
    let err = fails(&["evaluate", "--model", s(&model), "--features", s(&n5), "--out", s(dir.path())]);
    assert!(err.contains("schema mismatch"), "{err}");
}

#[test]
fn missing_model_is_an_error() {
    let dir = TempDir::new().unwrap();
    let features = dir.path().join("f.csv");
    planted(50, 1, 1).save(&features).unwrap();
    let missing = dir.path().join("nope.dfrf");
    let err = fails(&["evaluate", "--model", s(&missing), "--features", s(&features), "--out", s(dir.path())]);
    assert!(err.contains("nope.dfrf"), "{err}");
}

#[test]
fn extraction_skips_pages_without_tsv() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus(dir.path(), "0.05");
    let manifest = json(&corpus.join("manifest.json"));
    let first = &manifest["pages"][0];
    let index = first["page_index"].as_u64().unwrap();
    let split = first["split"].as_str().unwrap();
    fs::remove_file(corpus.join(split).join(format!("page{index:04}.tsv"))).unwrap();
    let out_dir = dir.path().join("features");
    let out = ok(&["extract", "--corpus", s(&corpus), "--n", "3", "--n", "5", "--out", s(&out_dir)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped"));
    let log = json(&out_dir.join("extract_log.json"));
    assert_eq!(log["pages_processed"], 2);
    assert_eq!(log["skipped"][0]["page_index"], index);
    for split in ["train", "test"] {
        let a = FeatureMatrix::load(&out_dir.join(format!("features_{split}_n3.csv"))).unwrap();
        let b = FeatureMatrix::load(&out_dir.join(format!("features_{split}_n5.csv"))).unwrap();
        assert_eq!((a.n, b.n), (3, 5));
        assert_eq!(a.labels, b.labels);
        assert_eq!(b.cols(), vector_len(5));
    }
}

#[test]
fn unmanipulated_corpus_has_no_positive_labels() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus(dir.path(), "0");
    let out_dir = dir.path().join("features");
    ok(&["extract", "--corpus", s(&corpus), "--split", "train", "--out", s(&out_dir)]);
    let m = FeatureMatrix::load(&out_dir.join("features_train_n3.csv")).unwrap();
    assert!(m.rows() > 500);
    assert!(m.labels.iter().all(|&y| y == 0));
}

#[test]
fn replayed_config_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let features = dir.path().join("f.csv");
    planted(150, 1, 6).save(&features).unwrap();
    let first = dir.path().join("first");
    ok(&["train", "--features", s(&features), "--trees", "9", "--seed", "13", "--out", s(&first)]);
    let second = dir.path().join("second");
    let config = first.join("config.train.json");
    ok(&["--config", s(&config), "--out", s(&second)]);
    assert_eq!(fs::read(first.join("model.dfrf")).unwrap(), fs::read(second.join("model.dfrf")).unwrap());
    let replayed = json(&second.join("config.train.json"));
    assert_eq!(replayed["seed"], 13);
    assert_eq!(replayed["command"], json(&config)["command"]);
    let err = fails(&["--config", s(&config), "train", "--features", s(&features)]);
    assert!(err.contains("--config"), "{err}");
}

#[test]
fn trained_model_beats_chance_on_held_out_rows() {
    let dir = TempDir::new().unwrap();
    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.bin.dfmx"));
    planted(400, 2, 1).save(&train).unwrap();
    planted(200, 2, 2).save(&test).unwrap();
    ok(&["train", "--features", s(&train), "--trees", "20", "--out", s(dir.path())]);
    let model = dir.path().join("model.dfrf");
    ok(&["evaluate", "--model", s(&model), "--features", s(&test), "--out", s(dir.path())]);
    let metrics = json(&dir.path().join("metrics.json"));
    assert!(metrics["overall"]["f1"].as_f64().unwrap() > 0.5, "{metrics}");
    let predictions = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert_eq!(predictions.lines().count(), 201);
}
