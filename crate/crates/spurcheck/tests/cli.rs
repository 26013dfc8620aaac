//! End-to-end behavior of the `spurcheck` binary: exit codes, error
//! messages, locking, interactive labeling, cross-domain selection and
//! reproducible artifacts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use spurcheck::formats::embeddings as cev;
use spurcheck::formats::tables;
use spurcheck_core::contexts::Provenance as StoreProvenance;

const STAGES: [&str; 8] = ["ingest", "train-doc", "extract", "match", "featurize", "train-word", "select", "report"];

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth200")
}

fn config() -> PathBuf {
    fixture().join("spurcheck.toml")
}

fn run_with(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_spurcheck"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    if let Some(text) = stdin {
        pipe.write_all(text.as_bytes()).unwrap();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn run(args: &[&str]) -> Output {
    run_with(args, None)
}

/// Runs `args` against the fixture config with output in `out`.
fn stage(out: &Path, args: &[&str]) -> Output {
    let config = config();
    let mut all = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["select", "--help"])), 0);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["ingest", "--no-such-flag"])), 1);

    let bad_toml = dir.path().join("bad.toml");
    std::fs::write(&bad_toml, "[doc]\nthreshold = \"high\"\n").unwrap();
    let o = run(&["--config", bad_toml.to_str().unwrap(), "ingest"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));

    let o = stage(dir.path(), &["select", "--strategy", "alphabetical"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("alphabetical"), "{}", stderr(&o));

    let o = stage(dir.path(), &["--metric", "f1", "ingest"]);
    assert_eq!(code(&o), 1);

    let o = run(&["--out", dir.path().to_str().unwrap(), "synth", "--tag", "B2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_artifacts_name_the_stage_to_run() {
    let out = tempfile::tempdir().unwrap();
    let o = stage(out.path(), &["train-doc"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("corpus.jsonl") && stderr(&o).contains("run `spurcheck ingest` first"), "{}", stderr(&o));

    ok(stage(out.path(), &["ingest"]));
    ok(stage(out.path(), &["train-doc"]));
    let o = stage(out.path(), &["match"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run `spurcheck extract` first"), "{}", stderr(&o));
}

#[test]
fn malformed_dataset_is_a_data_error_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.tsv");
    std::fs::write(&data, "1\ta fine sentence\n-1\tanother fine one\nnot a record\n").unwrap();
    let o = stage(&dir.path().join("out"), &["--dataset", data.to_str().unwrap(), "ingest"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("data.tsv:3"), "{}", stderr(&o));
}

#[test]
fn report_refuses_artifacts_from_different_configs() {
    let out = tempfile::tempdir().unwrap();
    ok(stage(out.path(), &["run-all"]));
    ok(stage(out.path(), &["--threshold", "0.6", "ingest"]));
    let o = stage(out.path(), &["--threshold", "0.6", "report"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("top_words.csv") && stderr(&o).contains("was written under config"), "{}", stderr(&o));
    // downstream stages refuse the stale inputs too
    let o = stage(out.path(), &["--threshold", "0.6", "extract"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn a_locked_directory_is_refused() {
    let out = tempfile::tempdir().unwrap();
    std::fs::write(out.path().join(".spurcheck.lock"), "").unwrap();
    let o = stage(out.path(), &["ingest"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
    assert!(!out.path().join("corpus.jsonl").exists());

    std::fs::remove_file(out.path().join(".spurcheck.lock")).unwrap();
    ok(stage(out.path(), &["ingest"]));
    assert!(!out.path().join(".spurcheck.lock").exists(), "the lock is released on exit");
}

#[test]
fn annotate_reads_answers_from_stdin() {
    let out = tempfile::tempdir().unwrap();
    for s in ["ingest", "train-doc", "extract", "match"] {
        ok(stage(out.path(), &[s]));
    }
    let labels = out.path().join("my_labels.csv");
    let annotate = |answers: Option<&str>| {
        let labels = labels.to_str().unwrap();
        let (config, out) = (config(), out.path().to_str().unwrap().to_owned());
        run_with(&["--config", config.to_str().unwrap(), "--out", &out, "--labels", labels, "annotate"], answers)
    };

    let o = ok(annotate(Some("s\nmaybe\ngenuine\nk\nq\n")));
    let text = stdout(&o);
    assert!(text.contains("please answer s, g, k or q"), "{text}");
    assert!(text.contains("labeled 1 spurious, 1 genuine; skipped 1;"), "{text}");
    let first = tables::read_labels(&labels).unwrap();
    assert_eq!(first.len(), 2);

    // label everything that is left; end of input also stops the loop
    let o = ok(annotate(Some(&"g\n".repeat(500))));
    assert!(stdout(&o).contains(" 0 left"), "{}", stdout(&o));
    let all = tables::read_labels(&labels).unwrap();
    let (_, top) = tables::read_top_words(&out.path().join("top_words.csv")).unwrap();
    assert_eq!(all.len(), top.len());
    assert_eq!(&all[..2], &first[..]);

    let o = ok(annotate(None));
    assert!(stdout(&o).contains("every top word is labeled"), "{}", stdout(&o));

    // the labels file does not enter the config hash
    ok(stage(out.path(), &["--labels", labels.to_str().unwrap(), "featurize"]));
    // one spurious word cannot fill every cross-validation fold
    let o = stage(out.path(), &["--labels", labels.to_str().unwrap(), "train-word"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("one class"), "{}", stderr(&o));
}

#[test]
fn stage_by_stage_runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for s in STAGES {
        ok(stage(a.path(), &[s]));
        ok(stage(b.path(), &[s]));
    }
    ok(stage(c.path(), &["run-all"]));
    let (fa, fb, fc) = (files(a.path()), files(b.path()), files(c.path()));
    assert!(fa.len() >= 20, "{:?}", fa.keys());
    assert_eq!(fa, fb);
    assert_eq!(fa, fc, "run-all writes what the individual stages write");

    // rerunning a stage in place rewrites the same bytes
    ok(stage(a.path(), &["match"]));
    assert_eq!(files(a.path()), fb);
}

#[test]
fn select_with_a_word_model_from_another_domain() {
    let other = tempfile::tempdir().unwrap();
    let o = ok(run(&["--out", other.path().to_str().unwrap(), "synth", "--sentences", "400", "--tag", "b"]));
    assert_eq!(stdout(&o).lines().count(), 3);
    let other_cfg = other.path().join("spurcheck.toml");
    let other_out = other.path().join("out");
    ok(run(&[
        "--config",
        other_cfg.to_str().unwrap(),
        "--out",
        other_out.to_str().unwrap(),
        "--threshold",
        "0.5",
        "--folds",
        "5",
        "run-all",
    ]));
    let model = other_out.join("word_model.txt");
    assert!(model.exists());

    let out = tempfile::tempdir().unwrap();
    ok(stage(out.path(), &["run-all"]));
    assert!(!out.path().join("curve_predicted_transfer.csv").exists());
    ok(stage(out.path(), &["select", "--strategy", "predicted_transfer", "--word-model", model.to_str().unwrap()]));
    for f in ["curve_predicted_transfer.csv", "predictions_transfer.csv", "word_eval_transfer.csv"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let eval: Vec<tables::EvalRow> = tables::read_table(&out.path().join("word_eval_transfer.csv")).unwrap();
    assert_eq!(eval.len(), 1);
    assert_eq!(eval[0].name, "transfer");
    assert!(eval[0].auc > 0.5, "{:?}", eval[0]);
    ok(stage(out.path(), &["report"]));
    let report = std::fs::read_to_string(out.path().join("report.txt")).unwrap();
    assert!(report.contains("predicted_transfer") && report.contains("transfer "), "{report}");

    // without a word model the strategy cannot run
    let o = stage(out.path(), &["select", "--strategy", "predicted_transfer"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn external_embeddings_are_checked_against_the_contexts() {
    let reference = tempfile::tempdir().unwrap();
    for s in ["ingest", "train-doc", "extract", "match"] {
        ok(stage(reference.path(), &[s]));
    }

    let out = tempfile::tempdir().unwrap();
    let ext = out.path().join("encoder.cev");
    let ext_arg = ext.to_str().unwrap().to_owned();
    let with_ext = |args: &[&str]| {
        let mut a = vec!["--embeddings", ext_arg.as_str()];
        a.extend_from_slice(args);
        stage(out.path(), &a)
    };
    for s in ["ingest", "train-doc", "extract"] {
        ok(with_ext(&[s]));
    }
    assert!(!out.path().join("embeddings.cev").exists(), "no built-in vectors with an external source");
    assert_eq!(
        std::fs::read(out.path().join("contexts.jsonl")).unwrap().split(|&b| b == b'\n').skip(1).collect::<Vec<_>>(),
        std::fs::read(reference.path().join("contexts.jsonl")).unwrap().split(|&b| b == b'\n').skip(1).collect::<Vec<_>>(),
    );

    // an encoder that skipped one context
    let store = cev::read(&reference.path().join("embeddings.cev"), StoreProvenance::ExternalFile).unwrap();
    let mut short = spurcheck_core::contexts::EmbeddingStore::new(store.dim(), StoreProvenance::ExternalFile);
    for (id, v) in store.iter().skip(1) {
        short.insert(id, v).unwrap();
    }
    cev::write(&ext, &short).unwrap();
    let o = with_ext(&["match"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    // a truncated file
    let bytes = cev::encode(&store);
    std::fs::write(&ext, &bytes[..bytes.len() - 3]).unwrap();
    let o = with_ext(&["match"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    // the complete file gives the same matches as the built-in vectors
    std::fs::write(&ext, &bytes).unwrap();
    ok(with_ext(&["match"]));
    let body = |p: &Path| std::fs::read_to_string(p).unwrap().lines().skip(1).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(&out.path().join("matches.jsonl")), body(&reference.path().join("matches.jsonl")));

    // an encoder manifest listing a different word for one context
    let manifest = out.path().join("encoder_contexts.jsonl");
    let text = std::fs::read_to_string(out.path().join("contexts.jsonl")).unwrap();
    let first_word = text.lines().nth(1).unwrap().split("\"word\":\"").nth(1).unwrap().split('"').next().unwrap().to_owned();
    let tampered = text.replacen(&format!("\"word\":\"{first_word}\""), "\"word\":\"zzz\"", 1);
    std::fs::write(&manifest, tampered).unwrap();
    let cfg_text = std::fs::read_to_string(config())
        .unwrap()
        .replace("data.tsv", &fixture().join("data.tsv").to_string_lossy())
        .replace("\"labels.csv\"", &format!("{:?}", fixture().join("labels.csv")))
        .replace("\"lexicon.txt\"", &format!("{:?}", fixture().join("lexicon.txt")))
        .replace("source = \"fallback\"", &format!("source = \"file\"\npath = {:?}\nmanifest = {:?}", ext, manifest));
    let cfg = out.path().join("encoder.toml");
    std::fs::write(&cfg, cfg_text).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "match"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("embedding manifest disagrees"), "{}", stderr(&o));
}
