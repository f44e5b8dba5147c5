use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/repair_fixture.txt")
}

fn relcorpus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relcorpus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn no_partials(dir: &Path) -> bool {
    fs::read_dir(dir).unwrap().all(|e| {
        !e.unwrap()
            .file_name()
            .to_string_lossy()
            .ends_with(".partial")
    })
}

#[test]
fn repair_on_the_fault_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&relcorpus(&["repair", s(&fixture()), "--out", s(&out)]));
    assert!(
        stdout.contains("kept 7, repaired 1, replaced 0, removed 2"),
        "{stdout}"
    );
    let report = json(&out.join("repair_fixture.repair-report.json"));
    assert_eq!(report["counts"]["removed"], 2);
    assert_eq!(report["counts"]["repaired"], 1);
    assert_eq!(report["removed_by_fault"]["MultipleTags"], 2);
    let corpus = fs::read_to_string(out.join("repair_fixture.repaired.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 8);
    let manifest = json(&out.join("manifest.repair.json"));
    assert_eq!(manifest["counts"]["removed"], 2);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(no_partials(&out));
}

#[test]
fn validate_lists_faults_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&relcorpus(&["validate", s(&fixture()), "--out", s(&out)]));
    assert!(stdout.contains("10 sentences, 3 with faults"), "{stdout}");
    assert!(stdout.contains(":3: MultipleTags(e2-open)"), "{stdout}");
    let strict = relcorpus(&["validate", "--strict", s(&fixture()), "--out", s(&out)]);
    assert!(!strict.status.success());
}

#[test]
fn score_with_identical_gold_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let pred = dir.path().join("pred.jsonl");
    fs::write(
        &pred,
        "{\"id\":1,\"gold\":\"Cause-Effect(e1,e2)\",\"pred\":\"Cause-Effect(e1,e2)\"}\n\
         {\"id\":2,\"gold\":\"Other\",\"pred\":\"Other\"}\n\
         {\"id\":3,\"gold\":\"Message-Topic(e2,e1)\",\"pred\":\"Message-Topic(e2,e1)\"}\n",
    )
    .unwrap();
    let stdout = ok(&relcorpus(&["score", "--pred", s(&pred), "--out", s(&out)]));
    assert!(stdout.contains("macro F1 = 1.0000"), "{stdout}");
    assert!(out.join("score.json").exists());
}

#[test]
fn score_tsv_against_gold_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&relcorpus(&["repair", s(&fixture()), "--out", s(&out)]));
    let gold = out.join("repair_fixture.repaired.jsonl");
    let tsv: String = fs::read_to_string(&gold)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!("{}\t{}\n", v["id"], v["label"].as_str().unwrap())
        })
        .collect();
    let pred = dir.path().join("pred.tsv");
    fs::write(&pred, tsv).unwrap();
    let scored = dir.path().join("scored");
    let stdout = ok(&relcorpus(&[
        "score",
        "--gold",
        s(&gold),
        "--pred",
        s(&pred),
        "--scheme",
        "way18",
        "--out",
        s(&scored),
    ]));
    assert!(stdout.contains("macro F1 = 1.0000"), "{stdout}");
}

#[test]
fn replayed_augmentation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("transcript.jsonl");
    let recorded = dir.path().join("recorded");
    ok(&relcorpus(&[
        "augment",
        s(&fixture_repaired(dir.path())),
        "--backtranslate",
        "--backend",
        "identity",
        "--record",
        s(&transcript),
        "--seed",
        "11",
        "--out",
        s(&recorded),
    ]));
    assert!(fs::read_to_string(&transcript).unwrap().lines().count() > 0);

    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&relcorpus(&[
            "augment",
            s(&fixture_repaired(dir.path())),
            "--backtranslate",
            "--replay",
            s(&transcript),
            "--seed",
            "11",
            "--out",
            s(&out),
        ]));
        outputs.push((
            fs::read(out.join("repaired.augmented.jsonl")).unwrap(),
            fs::read(out.join("repaired.augment-report.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(
        outputs[0].0,
        fs::read(recorded.join("repaired.augmented.jsonl")).unwrap()
    );
}

/// The repaired fixture, copied to a stable name.
fn fixture_repaired(dir: &Path) -> PathBuf {
    let target = dir.join("repaired.jsonl");
    if !target.exists() {
        let out = dir.join("fixture-out");
        ok(&relcorpus(&["repair", s(&fixture()), "--out", s(&out)]));
        fs::copy(out.join("repair_fixture.repaired.jsonl"), &target).unwrap();
    }
    target
}

#[test]
fn replay_miss_fails_without_complete_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("out");
    let result = relcorpus(&[
        "augment",
        s(&fixture_repaired(dir.path())),
        "--backtranslate",
        "--replay",
        s(&empty),
        "--out",
        s(&out),
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("sentence"), "{stderr}");
    assert!(!out.join("repaired.augmented.jsonl").exists());
    assert!(!out.join("manifest.augment.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture(), dir.path().join("train.txt")).unwrap();
    fs::write(
        dir.path().join("pipeline.toml"),
        "inputs = [\"train.txt\"]\nout = \"build\"\nseed = 5\n\n[augment]\ndeletions_per_sentence = 2\n\n[export]\nmax_tokens = 12\n",
    )
    .unwrap();
    let config = dir.path().join("pipeline.toml");
    ok(&relcorpus(&[
        "pipeline",
        "--config",
        s(&config),
        "--seed",
        "9",
    ]));
    let build = dir.path().join("build");
    let manifest = json(&build.join("manifest.pipeline.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["augment"]["deletions_per_sentence"], 2);
    assert_eq!(manifest["config"]["export"]["max_tokens"], 12);
    assert_eq!(manifest["counts"]["total_repair"]["removed"], 2);
    let marked = fs::read_to_string(build.join("train.marked.jsonl")).unwrap();
    for line in marked.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let text = v["text"].as_str().unwrap();
        assert!(text.starts_with("[CLS] "));
        assert!(text.split(' ').count() <= 12);
    }
    assert!(no_partials(&build));
}

#[test]
fn missing_input_is_a_diagnostic_error() {
    let result = relcorpus(&["parse", "/nonexistent/corpus.txt"]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("does not exist"));
}

#[test]
fn parse_reports_the_faulty_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let result = relcorpus(&["parse", s(&fixture()), "--out", s(&dir.path().join("out"))]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("repair_fixture.txt") && stderr.contains('3'),
        "{stderr}"
    );
}
