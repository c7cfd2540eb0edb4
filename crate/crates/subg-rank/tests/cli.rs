//! End-to-end checks of the `subg-rank` binary: exit codes, reproducible
//! outputs, and the featurize/train/eval/cv flow on real files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subg-rank"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let output = run(args);
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write_toy_tuples(dir: &Path) -> String {
    let path = path_str(dir, "tuples.tsv");
    std::fs::write(&path, "v1\tobj\ta1\t2\nv1\tobj\ta2\t1\nv2\tobj\ta1\t1\n").unwrap();
    path
}

#[test]
fn usage_errors_exit_one() {
    let output = run(&["no-such-command"]);
    assert_eq!(output.status.code(), Some(1));

    let output = run(&["cv"]); // missing --corpus
    assert_eq!(output.status.code(), Some(1));

    // classes must be at least 1.
    let dir = tempfile::tempdir().unwrap();
    let tuples = write_toy_tuples(dir.path());
    let out = path_str(dir.path(), "m.json");
    let output = run(&["lexsel-train", "--corpus", &tuples, "--classes", "0", "--out", &out]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // Missing input file.
    let out = path_str(dir.path(), "m.json");
    let output = run(&["lexsel-train", "--corpus", "/nonexistent.tsv", "--out", &out]);
    assert_eq!(output.status.code(), Some(2));

    // Malformed TSV line: the error names the line number.
    let bad = path_str(dir.path(), "bad.tsv");
    std::fs::write(&bad, "v1\tobj\ta1\t2\nnot a tuple\n").unwrap();
    let output = run(&["lexsel-train", "--corpus", &bad, "--out", &out]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));

    // Corpus with no ambiguous sentences.
    let corpus = path_str(dir.path(), "single.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\":\"s\",\"candidates\":[{\"id\":\"p\",\"features\":{\"f\":1.0},\"gold\":true}]}\n",
    )
    .unwrap();
    let model = path_str(dir.path(), "w.json");
    let output = run(&["train", "--corpus", &corpus, "--out", &model]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let tuples = write_toy_tuples(dir.path());

    let model_a = path_str(dir.path(), "a.json");
    let model_b = path_str(dir.path(), "b.json");
    for out in [&model_a, &model_b] {
        run_ok(&[
            "lexsel-train", "--corpus", &tuples, "--classes", "2", "--seed", "11", "--out", out,
        ]);
    }
    assert_eq!(std::fs::read(&model_a).unwrap(), std::fs::read(&model_b).unwrap());

    let corpus_a = path_str(dir.path(), "a.jsonl");
    let corpus_b = path_str(dir.path(), "b.jsonl");
    for out in [&corpus_a, &corpus_b] {
        run_ok(&["synth", "--sentences", "20", "--seed", "3", "--aux", "1", "--out", out]);
    }
    assert_eq!(std::fs::read(&corpus_a).unwrap(), std::fs::read(&corpus_b).unwrap());
    let different = path_str(dir.path(), "c.jsonl");
    run_ok(&["synth", "--sentences", "20", "--seed", "4", "--aux", "1", "--out", &different]);
    assert_ne!(std::fs::read(&corpus_a).unwrap(), std::fs::read(&different).unwrap());
}

#[test]
fn outputs_embed_seed_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let tuples = write_toy_tuples(dir.path());
    let model = path_str(dir.path(), "m.json");
    run_ok(&["lexsel-train", "--corpus", &tuples, "--classes", "1", "--seed", "9", "--out", &model]);
    let doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&model).unwrap()).unwrap();
    assert_eq!(doc["meta"]["seed"], serde_json::json!(9));
    assert_eq!(doc["meta"]["version"], serde_json::json!(env!("CARGO_PKG_VERSION")));
    assert!(doc["meta"]["config"].is_object());
}

fn count_manifest(corpus_path: &str) -> (usize, usize) {
    let text = std::fs::read_to_string(corpus_path).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let meta = &first["_meta"];
    (
        meta["features"].as_array().map_or(0, Vec::len),
        meta["aux_features"].as_array().map_or(0, Vec::len),
    )
}

#[test]
fn featurize_grows_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path_str(dir.path(), "corpus.jsonl");
    let tuples = path_str(dir.path(), "tuples.tsv");
    run_ok(&[
        "synth", "--lexical", "--sentences", "40", "--seed", "5",
        "--out", &corpus, "--tuples-out", &tuples,
    ]);
    let lexsel = path_str(dir.path(), "lexsel.json");
    run_ok(&["lexsel-train", "--corpus", &tuples, "--classes", "2", "--seed", "5", "--out", &lexsel]);
    let (ordinary, aux) = count_manifest(&corpus);
    assert_eq!(aux, 0);

    let one = path_str(dir.path(), "one.jsonl");
    run_ok(&[
        "featurize", "--corpus", &corpus, "--model", &lexsel, "--features", "logprob",
        "--out", &one,
    ]);
    assert_eq!(count_manifest(&one), (ordinary, 1));

    let three = path_str(dir.path(), "three.jsonl");
    run_ok(&["featurize", "--corpus", &corpus, "--model", &lexsel, "--out", &three]);
    assert_eq!(count_manifest(&three), (ordinary, 3));

    // No lexical model and no auxiliary scores: the corpus passes through.
    let copy = path_str(dir.path(), "copy.jsonl");
    run_ok(&["featurize", "--corpus", &corpus, "--out", &copy]);
    assert_eq!(count_manifest(&copy), (ordinary, 0));

    // --features without --model is a usage error.
    let nowhere = path_str(dir.path(), "nowhere.jsonl");
    let output = run(&["featurize", "--corpus", &corpus, "--features", "logprob", "--out", &nowhere]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn external_aux_scores_attach() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path_str(dir.path(), "corpus.jsonl");
    run_ok(&["synth", "--sentences", "6", "--min-candidates", "2", "--max-candidates", "2", "--seed", "2", "--out", &corpus]);

    // One positive score per candidate.
    let scores = path_str(dir.path(), "scores.jsonl");
    let mut lines = String::new();
    for i in 0..6 {
        for c in 0..2 {
            lines.push_str(&format!(
                "{{\"sentence\":\"s{i:05}\",\"candidate\":\"p{c}\",\"q\":{}}}\n",
                0.1 + 0.2 * c as f64
            ));
        }
    }
    std::fs::write(&scores, lines).unwrap();

    let out = path_str(dir.path(), "aug.jsonl");
    let spec = format!("shallow={scores}");
    run_ok(&["featurize", "--corpus", &corpus, "--aux", &spec, "--out", &out]);
    let (_, aux) = count_manifest(&out);
    assert_eq!(aux, 1);
    assert!(std::fs::read_to_string(&out).unwrap().contains("shallow"));

    // Scores covering only part of the corpus are a data error.
    std::fs::write(&scores, "{\"sentence\":\"s00000\",\"candidate\":\"p0\",\"q\":0.5}\n").unwrap();
    let output = run(&["featurize", "--corpus", &corpus, "--aux", &spec, "--out", &out]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn train_eval_cv_flow() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path_str(dir.path(), "corpus.jsonl");
    run_ok(&["synth", "--sentences", "60", "--seed", "8", "--out", &corpus]);

    let model = path_str(dir.path(), "model.json");
    run_ok(&["train", "--corpus", &corpus, "--out", &model, "--max-iter", "200"]);
    let doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&model).unwrap()).unwrap();
    assert_eq!(doc["lambda"].as_array().unwrap().len(), doc["features"].as_array().unwrap().len());

    let report = path_str(dir.path(), "eval.json");
    let output = run_ok(&["eval", "--corpus", &corpus, "--model", &model, "--json", "--out", &report]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("correct_credit"));
    let eval_doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&report).unwrap()).unwrap();
    assert!(eval_doc["report"]["num_sentences"].as_u64().unwrap() > 0);

    let cv_report = path_str(dir.path(), "cv.json");
    run_ok(&["cv", "--corpus", &corpus, "--folds", "5", "--seed", "8", "--threads", "1", "--json", "--out", &cv_report]);
    let cv_doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&cv_report).unwrap()).unwrap();
    let folds = cv_doc["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 5);
    let total: u64 = folds
        .iter()
        .map(|f| f["report"]["num_sentences"].as_u64().unwrap())
        .sum();
    assert_eq!(total, cv_doc["cumulative"]["num_sentences"].as_u64().unwrap());

    // The human-readable table carries the report columns.
    let output = run_ok(&["cv", "--corpus", &corpus, "--folds", "5", "--seed", "8"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("indistinguishable"));
    assert!(stdout.contains("correct"));
    assert!(stdout.contains("-log PL"));
    assert!(stdout.contains("cumulative"));
}

#[test]
fn gradcheck_passes_on_synthetic_data() {
    let output = run_ok(&["gradcheck", "--seed", "4", "--json"]);
    let doc: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("gradcheck emits JSON");
    assert_eq!(doc["pass"], serde_json::json!(true));
}

#[test]
fn lexsel_inspect_prints_rankings() {
    let dir = tempfile::tempdir().unwrap();
    let tuples = write_toy_tuples(dir.path());
    let model = path_str(dir.path(), "m.json");
    run_ok(&["lexsel-train", "--corpus", &tuples, "--classes", "1", "--seed", "0", "--out", &model]);

    let output = run_ok(&["lexsel-inspect", "--model", &model, "--corpus", &tuples, "--top", "2"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("prior"));
    assert!(stdout.contains("a1"));

    let output = run_ok(&["lexsel-inspect", "--model", &model, "--corpus", &tuples, "--json"]);
    let doc: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(doc["arguments"][0][0], serde_json::json!("a1"));
    assert!((doc["arguments"][0][1].as_f64().unwrap() - 0.75).abs() < 1e-9);

    // Out-of-range class index is a data error.
    let output = run(&["lexsel-inspect", "--model", &model, "--class", "5"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn consistency_experiment_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let report: PathBuf = dir.path().join("consistency.json");
    run_ok(&[
        "synth", "--experiment", "consistency", "--sentences", "400", "--heldout", "50",
        "--seed", "1", "--out", report.to_str().unwrap(),
    ]);
    let doc: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&report).unwrap()).unwrap();
    assert!(doc["report"]["mean_kl"].as_f64().unwrap().is_finite());
    assert_eq!(doc["report"]["num_heldout"], serde_json::json!(50));
}
