//! End-to-end checks of the `sentimill` binary. Remote calls are replayed from
//! fixture pages written into temporary directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FAKE_KEY: &str = "fixture-key-should-not-leak";

fn sentimill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentimill"))
        .args(args)
        .env_remove("YT_API_KEY")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn item(video: &str, id: &str, text: &str) -> String {
    format!(
        r#"{{"id":"{id}","snippet":{{"videoId":"{video}","topLevelComment":{{"id":"{id}","snippet":{{"videoId":"{video}","textDisplay":"x","textOriginal":{},"publishedAt":"2023-10-20T12:34:56Z","likeCount":1}}}}}}}}"#,
        serde_json::to_string(text).unwrap()
    )
}

/// Writes `texts` as pages of 100 items for `video`.
fn write_fixture(dir: &Path, video: &str, texts: &[String]) {
    let chunks: Vec<_> = texts.chunks(100).collect();
    for (i, chunk) in chunks.iter().enumerate() {
        let items: Vec<String> = chunk
            .iter()
            .enumerate()
            .map(|(j, t)| item(video, &format!("{video}-{}", i * 100 + j), t))
            .collect();
        let next = if i + 1 < chunks.len() {
            format!(r#","nextPageToken":"T{}""#, i + 2)
        } else {
            String::new()
        };
        let body = format!(r#"{{"kind":"youtube#commentThreadListResponse"{next},"items":[{}]}}"#, items.join(","));
        fs::write(dir.join(format!("{video}.page{}.json", i + 1)), body).unwrap();
    }
}

fn sample_texts(n: usize) -> Vec<String> {
    let pool = [
        "I love this great game",
        "terrible awful trailer",
        "the stream starts on tuesday",
        "good graphics but bad story",
        "not good at all",
    ];
    (0..n).map(|i| format!("{} #{i}", pool[i % pool.len()])).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fetch_replays_every_page() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "vid854", &sample_texts(854));
    let out_file = dir.path().join("corpus.jsonl");
    let out = sentimill(&[
        "fetch",
        "--video-id",
        "vid854",
        "--max",
        "1000",
        "--out",
        path_str(&out_file),
        "--fixtures",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("fetched 854 comments"));
    assert_eq!(fs::read_to_string(&out_file).unwrap().lines().count(), 854);
}

#[test]
fn fetch_honours_max() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "v", &sample_texts(250));
    let out_file = dir.path().join("c.jsonl");
    let out = sentimill(&[
        "fetch",
        "--video-id",
        "v",
        "--max",
        "120",
        "--out",
        path_str(&out_file),
        "--fixtures",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&out_file).unwrap().lines().count(), 120);
}

#[test]
fn label_reports_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let texts = ["I love this great game", "terrible awful trailer", "the stream starts on tuesday"].map(String::from);
    write_fixture(dir.path(), "three", &texts);
    let raw = dir.path().join("raw.jsonl");
    let labeled = dir.path().join("labeled.jsonl");
    let f = sentimill(&["fetch", "--video-id", "three", "--out", path_str(&raw), "--fixtures", path_str(dir.path())]);
    assert_eq!(code(&f), 0, "{}", stderr(&f));
    let out = sentimill(&["label", "--input", path_str(&raw), "--out", path_str(&labeled)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        stdout(&out).trim(),
        "n=3 negative=1 (33.3%) neutral=1 (33.3%) positive=1 (33.3%)"
    );
    let lines: Vec<serde_json::Value> = fs::read_to_string(&labeled)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let labels: Vec<&str> = lines.iter().map(|v| v["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["positive", "negative", "neutral"]);
}

#[test]
fn comments_disabled_is_a_remote_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("closed.page1.json"),
        r#"{"error":{"code":403,"message":"disabled","errors":[{"reason":"commentsDisabled"}]}}"#,
    )
    .unwrap();
    let out = sentimill(&[
        "fetch",
        "--video-id",
        "closed",
        "--out",
        path_str(&dir.path().join("c.jsonl")),
        "--fixtures",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("closed"), "{}", stderr(&out));
}

#[test]
fn missing_api_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sentimill(&["fetch", "--video-id", "v", "--out", path_str(&dir.path().join("c.jsonl"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("YT_API_KEY"), "{}", stderr(&out));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "v", &sample_texts(5));
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = sentimill(&[
        "fetch",
        "--video-id",
        "v",
        "--out",
        path_str(&blocker.join("c.jsonl")),
        "--fixtures",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn unknown_algorithm_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"datasets": [{"synthetic": {"n": 50}}], "algorithms": ["naive_bayes", "random_forest"]}"#,
    );
    let out = sentimill(&["run-all", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("random_forest"), "{}", stderr(&out));
}

#[test]
fn missing_config_and_bad_arguments_exit_3() {
    let out = sentimill(&["run-all", "--config", "/nonexistent/run.json"]);
    assert_eq!(code(&out), 3);
    let out = sentimill(&["train-eval"]);
    assert_eq!(code(&out), 3);
    let out = sentimill(&["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn run_all_is_deterministic_and_keeps_the_key_out() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = dir.path().join("fixtures");
    fs::create_dir(&fixtures).unwrap();
    write_fixture(&fixtures, "vidA", &sample_texts(150));
    let cfg = write_config(
        dir.path(),
        r#"{
            "seed": 7,
            "output_dir": "out",
            "datasets": [
                {"name": "small", "synthetic": {"n": 200, "noise_rate": 0.1}},
                {"name": "video", "video_ids": ["vidA"], "max_comments": 150}
            ],
            "fetch": {"fixtures_dir": "fixtures"}
        }"#,
    );
    let mut manifests = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = sentimill(&["run-all", "--config", &cfg, "--out-dir", path_str(&out_dir), "--api-key", FAKE_KEY]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).starts_with("dataset,size,model,"));
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        manifests.push(manifest["artifacts"].clone());
        for entry in walk(&out_dir) {
            let bytes = fs::read(&entry).unwrap();
            assert!(
                !String::from_utf8_lossy(&bytes).contains(FAKE_KEY),
                "{} contains the api key",
                entry.display()
            );
        }
    }
    assert_eq!(manifests[0], manifests[1]);
    assert!(dir.path().join("a/video/comparison.svg").exists());
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn train_eval_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"datasets": [{"name": "s", "synthetic": {"n": 300}}], "algorithms": ["linear_svm", "naive_bayes"]}"#,
    );
    let out_dir = dir.path().join("te");
    let out = sentimill(&["train-eval", "--config", &cfg, "--out-dir", path_str(&out_dir), "--no-stratify", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
    assert!(out_dir.join("s/models/linear_svm.model").exists());
    assert!(!out_dir.join("s/models/logistic_regression.model").exists());

    let report_dir = dir.path().join("rep");
    let out = sentimill(&[
        "report",
        "--input",
        path_str(&out_dir.join("s/labeled.jsonl")),
        "--comparison",
        path_str(&out_dir.join("s/comparison.json")),
        "--out-dir",
        path_str(&report_dir),
        "--bins",
        "10",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let hist = fs::read_to_string(report_dir.join("polarity_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 11);
    assert!(fs::read_to_string(report_dir.join("comparison.svg")).unwrap().contains("acc-bar"));
}

#[test]
fn train_eval_rejects_unlabeled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "v", &sample_texts(20));
    let raw = dir.path().join("raw.jsonl");
    let f = sentimill(&["fetch", "--video-id", "v", "--out", path_str(&raw), "--fixtures", path_str(dir.path())]);
    assert_eq!(code(&f), 0);
    let cfg = write_config(dir.path(), r#"{"datasets": [{"corpus": "raw.jsonl"}]}"#);
    let out = sentimill(&["train-eval", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("not labeled"), "{}", stderr(&out));
}
