use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn fundcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fundcast"))
        .current_dir(dir)
        .env_remove("FUNDCAST_CONFIG")
        .env_remove("RUST_LOG")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        text(&out.stdout),
        text(&out.stderr)
    );
    text(&out.stdout)
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn manifest(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const STARTUPS: &str = r#"{"id":"s1","name":"Acme Robotics"}
{"id":"s2","name":"Blue Fin"}
"#;

const TEXTS: &str = r#"{"id":"t1","source":"news_headline","published_at":"2018-01-10","text":"Acme Robotics raises $5M in seed round"}
{"id":"t2","source":"news_headline","published_at":"2018-02-01","text":"Blue Fin opens an office in Lisbon"}
{"id":"t3","source":"news_headline","published_at":"2018-03-05","text":"Markets rally as $5M deals pile up"}
"#;

fn headline_corpus() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("startups.jsonl"), STARTUPS).unwrap();
    std::fs::write(dir.path().join("texts.jsonl"), TEXTS).unwrap();
    dir
}

#[test]
fn one_matching_headline_gives_one_event() {
    let dir = headline_corpus();
    let stdout = ok(&fundcast(dir.path(), &["extract-events", "--seed", "1"]));
    assert!(stdout.contains("events: 1"), "{stdout}");
    let events = std::fs::read_to_string(dir.path().join("out/events.jsonl")).unwrap();
    assert_eq!(events.lines().count(), 1);
    assert!(events.contains("\"startup_id\":\"s1\""));

    let m = manifest(dir.path().join("out/events.manifest.json"));
    assert_eq!(m["command"], "extract-events");
    assert_eq!(m["summary"]["events"], 1);
    assert_eq!(m["inputs"]["texts"]["path"], "texts.jsonl");
    assert_eq!(m["inputs"]["texts"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["artifacts"]["events"]["path"], "out/events.jsonl");
    assert!(m["timings"].as_array().unwrap().iter().any(|t| t["step"] == "total"));
    assert_eq!(m["config"]["seed"], 1);
}

#[test]
fn empty_text_corpus_warns_and_writes_empty_file() {
    let dir = headline_corpus();
    std::fs::write(dir.path().join("texts.jsonl"), "").unwrap();
    let out = fundcast(dir.path(), &["extract-events", "--seed", "1"]);
    ok(&out);
    assert!(text(&out.stderr).contains("empty"), "{}", text(&out.stderr));
    assert_eq!(std::fs::read(dir.path().join("out/events.jsonl")).unwrap(), b"");
}

#[test]
fn rerun_is_byte_identical() {
    let dir = headline_corpus();
    ok(&fundcast(dir.path(), &["extract-events", "--seed", "1"]));
    let first = std::fs::read(dir.path().join("out/events.jsonl")).unwrap();
    ok(&fundcast(dir.path(), &["extract-events", "--seed", "1"]));
    assert_eq!(std::fs::read(dir.path().join("out/events.jsonl")).unwrap(), first);

    let stdout = ok(&fundcast(dir.path(), &["rerun", "out/events.manifest.json", "--out-dir", "again"]));
    assert!(stdout.contains("events: identical"), "{stdout}");
    assert_eq!(std::fs::read(dir.path().join("again/events.jsonl")).unwrap(), first);
}

#[test]
fn rerun_refuses_changed_inputs() {
    let dir = headline_corpus();
    ok(&fundcast(dir.path(), &["extract-events", "--seed", "1"]));
    std::fs::write(dir.path().join("texts.jsonl"), &TEXTS[..TEXTS.find('\n').unwrap() + 1]).unwrap();
    let out = fundcast(dir.path(), &["rerun", "out/events.manifest.json", "--out-dir", "again"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("changed"));
}

#[test]
fn missing_corpus_fails_before_output() {
    let dir = headline_corpus();
    std::fs::remove_file(dir.path().join("texts.jsonl")).unwrap();
    let out = fundcast(dir.path(), &["extract-events", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("texts.jsonl"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_corpus_line_is_a_validation_error() {
    let dir = headline_corpus();
    std::fs::write(dir.path().join("startups.jsonl"), "{\"id\":\"s1\"}\n").unwrap();
    let out = fundcast(dir.path(), &["extract-events", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 1: name required"), "{}", text(&out.stderr));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = headline_corpus();
    for args in [
        vec!["extract-events"],
        vec!["extract-events", "--seed", "1", "--set", "model.kind=\"boosted\""],
        vec!["extract-events", "--seed", "1", "--set", "dataset.horizn_days=30"],
        vec!["extract-events", "--seed", "1", "--set", "noise.alpha=0.99"],
        vec!["no-such-command"],
    ] {
        let out = fundcast(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", text(&out.stderr));
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = headline_corpus();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = fundcast(dir.path(), &["extract-events", "--seed", "1", "--out-dir", "blocker/out"]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn flags_override_file_and_env_names_the_file() {
    let dir = headline_corpus();
    std::fs::write(dir.path().join("run.toml"), "seed = 5\noutput_dir = \"from_file\"\n[model]\nkind = \"linear\"\n")
        .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fundcast"))
        .current_dir(dir.path())
        .env("FUNDCAST_CONFIG", "run.toml")
        .args(["extract-events", "--seed", "9"])
        .output()
        .unwrap();
    ok(&out);
    let m = manifest(dir.path().join("from_file/events.manifest.json"));
    assert_eq!(m["config_file"], "run.toml");
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["model"]["kind"], "linear");
    assert_eq!(m["key_sources"]["seed"], "flag");
    assert_eq!(m["key_sources"]["output_dir"], "file");
    assert_eq!(m["config"]["dataset"]["horizon_days"], 365);
    assert_eq!(m["precedence"], "flags > file > defaults");
}

/// Synthetic corpus, events and dataset shared by the pipeline tests.
struct Pipeline {
    _dir: TempDir,
    root: PathBuf,
}

const SMALL: &[&str] = &["--seed", "3", "--set", "corpora.dir=\"corpus\"", "--set", "dataset.vocab_size=20"];

fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(&fundcast(&root, &["synth", "--startups", "80", "--seed", "11", "--out-dir", "corpus"]));
        ok(&fundcast(&root, &[&["extract-events"], SMALL].concat()));
        ok(&fundcast(&root, &[&["build-dataset"], SMALL].concat()));
        Pipeline { _dir: dir, root }
    })
}

fn with_out<'a>(cmd: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    [&[cmd][..], SMALL, &["--out-dir", out], extra].concat()
}

const QUICK_GBDT: &[&str] = &["--set", "model.gbdt.n_trees=20", "--set", "metrics.k_values=[5, 10]"];

#[test]
fn train_then_evaluate_produces_report() {
    let p = pipeline();
    let data = p.root.join("out/dataset.jsonl");
    let data = data.to_str().unwrap();
    ok(&fundcast(&p.root, &with_out("train", "eval_run", &[&["--dataset", data][..], QUICK_GBDT].concat())));
    let stdout =
        ok(&fundcast(&p.root, &with_out("evaluate", "eval_run", &[&["--dataset", data][..], QUICK_GBDT].concat())));
    assert!(stdout.contains("corrected AUC"), "{stdout}");
    let report = manifest(p.root.join("eval_run/report.json"));
    let auc = report["auc_raw"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert_eq!(report["noise"]["alpha"], 0.06);
    assert_eq!(report["at_k"].as_array().unwrap().len(), 2);
    let m = manifest(p.root.join("eval_run/report.manifest.json"));
    assert!(m["inputs"]["model"]["sha256"].is_string() && m["inputs"]["dataset"]["sha256"].is_string());
    assert!(p.root.join("eval_run/countries.csv").is_file());
}

#[test]
fn mismatched_schema_names_both_hashes() {
    let p = pipeline();
    ok(&fundcast(
        &p.root,
        &with_out("train", "mismatch", &[&["--dataset", "out/dataset.jsonl"][..], QUICK_GBDT].concat()),
    ));
    let other = [&["build-dataset"][..], &["--seed", "3", "--set", "corpora.dir=\"corpus\""]].concat();
    let other =
        [&other[..], &["--set", "dataset.vocab_size=1", "--out-dir", "mismatch_data", "--events", "out/events.jsonl"]]
            .concat();
    ok(&fundcast(&p.root, &other));
    let out = fundcast(
        &p.root,
        &with_out("evaluate", "mismatch", &[&["--dataset", "mismatch_data/dataset.jsonl"][..], QUICK_GBDT].concat()),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    let model = manifest(p.root.join("mismatch/model.json"));
    let data = manifest(p.root.join("mismatch_data/dataset.manifest.json"));
    let (a, b) = (model["schema_hash"].as_str().unwrap(), data["summary"]["schema_hash"].as_str().unwrap());
    assert_ne!(a, b);
    assert!(err.contains(a) && err.contains(b), "{err}");
}

#[test]
fn ablation_has_four_rows() {
    let p = pipeline();
    let data = p.root.join("out/dataset.jsonl");
    ok(&fundcast(
        &p.root,
        &with_out("ablate", "ablation_run", &[&["--dataset", data.to_str().unwrap()][..], QUICK_GBDT].concat()),
    ));
    let csv = std::fs::read_to_string(p.root.join("ablation_run/ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv.lines().nth(4).unwrap().starts_with("no web,web,"));
}

#[test]
fn explain_writes_attributions() {
    let p = pipeline();
    let data = p.root.join("out/dataset.jsonl");
    let data = data.to_str().unwrap();
    ok(&fundcast(&p.root, &with_out("train", "explain_run", &[&["--dataset", data][..], QUICK_GBDT].concat())));
    let extra = ["--dataset", data, "--set", "explain.top=3", "--set", "explain.permutations=8"];
    ok(&fundcast(&p.root, &with_out("explain", "explain_run", &extra)));
    let a = manifest(p.root.join("explain_run/attributions.json"));
    let examples = a["examples"].as_array().unwrap();
    assert_eq!(examples.len(), 3);
    let n_features = a["features"].as_array().unwrap().len();
    assert_eq!(examples[0]["attributions"].as_array().unwrap().len(), n_features);
    let swarm = std::fs::read_to_string(p.root.join("explain_run/beeswarm.csv")).unwrap();
    assert_eq!(swarm.lines().count(), 1 + 3 * n_features);
}

#[test]
fn audit_noise_reports_rates() {
    let p = pipeline();
    ok(&fundcast(&p.root, &with_out("audit-noise", "noise_run", &[])));
    let n = manifest(p.root.join("noise_run/noise.json"));
    let beta = n["noise"]["beta"].as_f64().unwrap();
    assert!(beta > 0.8 && beta <= 1.0);
    assert!(n["positives_audited"].as_u64().unwrap() > 0);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let p = pipeline();
    let data = p.root.join("out/dataset.jsonl");
    let data = data.to_str().unwrap();
    let rf = ["--dataset", data, "--set", "model.kind=\"random_forest\"", "--set", "model.random_forest.n_trees=15"];
    ok(&fundcast(&p.root, &[&with_out("train", "w1", &rf)[..], &["--workers", "1"]].concat()));
    ok(&fundcast(&p.root, &[&with_out("train", "w4", &rf)[..], &["--workers", "4"]].concat()));
    assert_eq!(
        std::fs::read(p.root.join("w1/model.json")).unwrap(),
        std::fs::read(p.root.join("w4/model.json")).unwrap()
    );

    ok(&fundcast(
        &p.root,
        &[&with_out("build-dataset", "d4", &["--events", "out/events.jsonl"])[..], &["--workers", "4"]].concat(),
    ));
    assert_eq!(std::fs::read(data).unwrap(), std::fs::read(p.root.join("d4/dataset.jsonl")).unwrap());

    let stdout = ok(&fundcast(&p.root, &["rerun", "w1/model.manifest.json", "--out-dir", "w_rerun", "--workers", "3"]));
    assert!(stdout.contains("model: identical"), "{stdout}");
}

#[test]
fn invalid_trainer_settings_exit_with_two() {
    let p = pipeline();
    let extra = ["--dataset", "out/dataset.jsonl", "--set", "model.gbdt.learning_rate=0"];
    let out = fundcast(&p.root, &with_out("train", "bad_trainer", &extra));
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(!p.root.join("bad_trainer/model.json").exists());
}
